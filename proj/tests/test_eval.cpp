#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "screloc/evaluate.hpp"
#include "screloc/pointcloud.hpp"
#include "screloc/synth.hpp"

using namespace scr;

namespace {

const Intrinsics kCam{500, 500, 320, 240, 640, 480};

FrameEstimate make_gt(const std::string& id, const Vec3& center) {
    FrameEstimate e;
    e.frame_id = id;
    e.pose.t = center;
    e.success = true;
    return e;
}

std::vector<FrameEstimate> simple_gt(int n) {
    std::vector<FrameEstimate> gt;
    for (int i = 0; i < n; i++) gt.push_back(make_gt("f" + std::to_string(i), Vec3(i, 0, 0)));
    return gt;
}

struct TmpDir {
    std::filesystem::path path;
    explicit TmpDir(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TmpDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("evaluate: perfect estimates score 100% with zero medians") {
    const auto gt = simple_gt(10);
    EvalReport r = evaluate(gt, gt);
    REQUIRE(r.accuracy_percent.size() == 2);
    CHECK(r.accuracy_percent[0] == 100.0);
    CHECK(r.accuracy_percent[1] == 100.0);
    CHECK(r.median_translation_cm == Catch::Approx(0.0).margin(1e-9));
    CHECK(r.median_rotation_deg == Catch::Approx(0.0).margin(1e-9));
    CHECK(r.failure_count == 0);
}

TEST_CASE("evaluate: half the frames offset by 20 cm -> 50% accuracy") {
    const auto gt = simple_gt(10);
    auto est = gt;
    for (int i = 0; i < 5; i++) est[i].pose.t += Vec3(0.20, 0, 0);
    EvalReport r = evaluate(est, gt);
    CHECK(r.accuracy_percent[0] == 50.0);   // (5 cm, 5 deg)
    CHECK(r.accuracy_percent[1] == 50.0);   // (10 cm, 5 deg): 20 cm still out
    CHECK(r.failure_count == 0);
    CHECK(r.median_translation_cm == Catch::Approx(10.0));  // half 0, half 20
}

TEST_CASE("evaluate: missing and failed estimates count as failures") {
    const auto gt = simple_gt(4);
    EvalReport empty = evaluate({}, gt);
    CHECK(empty.accuracy_percent[0] == 0.0);
    CHECK(empty.failure_count == 4);
    CHECK(std::isinf(empty.median_translation_cm));

    auto est = gt;
    est[2].success = false;
    EvalReport r = evaluate(est, gt);
    CHECK(r.failure_count == 1);
    CHECK(r.accuracy_percent[0] == 75.0);
}

TEST_CASE("evaluate rejects estimates for unknown frames") {
    const auto gt = simple_gt(3);
    auto est = gt;
    est[0].frame_id = "not_in_gt";
    CHECK_THROWS_AS(evaluate(est, gt), UnknownFrame);
}

TEST_CASE("evaluate is permutation-invariant in frame order") {
    const auto gt = simple_gt(8);
    auto est = gt;
    for (int i = 0; i < 3; i++) est[i].pose.t += Vec3(0.5, 0, 0);
    auto gt_shuffled = gt;
    auto est_shuffled = est;
    std::reverse(gt_shuffled.begin(), gt_shuffled.end());
    std::rotate(est_shuffled.begin(), est_shuffled.begin() + 3, est_shuffled.end());
    EvalReport a = evaluate(est, gt);
    EvalReport b = evaluate(est_shuffled, gt_shuffled);
    CHECK(a.accuracy_percent[0] == b.accuracy_percent[0]);
    CHECK(a.accuracy_percent[1] == b.accuracy_percent[1]);
    CHECK(a.median_translation_cm == b.median_translation_cm);
    CHECK(a.failure_count == b.failure_count);
}

TEST_CASE("pose CSV round trip preserves poses to f32 precision") {
    TmpDir dir("screloc_posecsv");
    Rng rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<FrameEstimate> est;
    for (int i = 0; i < 20; i++) {
        FrameEstimate e;
        e.frame_id = "frame_" + std::to_string(i);
        Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
        q.normalize();
        e.pose.R = q.toRotationMatrix();
        e.pose.t = Vec3(gauss(rng), gauss(rng), gauss(rng));
        e.inlier_count = i * 3;
        e.success = (i % 5) != 0;
        e.time_ms = 1.5 * i;
        est.push_back(e);
    }
    const std::string path = (dir.path / "poses.csv").string();
    write_pose_csv(est, path);
    const auto back = read_pose_csv(path);
    REQUIRE(back.size() == est.size());
    for (std::size_t i = 0; i < est.size(); i++) {
        CHECK(back[i].frame_id == est[i].frame_id);
        const PoseError pe = pose_error(back[i].pose, est[i].pose);
        CHECK(pe.translation_cm < 1e-4);
        CHECK(pe.rotation_deg < 1e-4);
        CHECK(back[i].inlier_count == est[i].inlier_count);
        CHECK(back[i].success == est[i].success);
        CHECK(back[i].time_ms == Catch::Approx(est[i].time_ms));
    }
}

TEST_CASE("pose CSV parse errors") {
    TmpDir dir("screloc_posecsv_bad");
    const std::string path = (dir.path / "bad.csv").string();
    {
        std::ofstream out(path);
        out << "frame_id,qw,qx,qy,qz,tx,ty,tz,inliers,success,time_ms\n";
        out << "f0,1,0,0,0,1,2\n";  // too few fields
    }
    CHECK_THROWS_AS(read_pose_csv(path), ParseError);
}

TEST_CASE("dataset loader reports malformed and missing files") {
    TmpDir dir("screloc_badds");
    namespace fs = std::filesystem;
    // empty dir -> empty list, not an error
    CHECK(load_dataset(dir.path.string()).frames.empty());

    fs::create_directories(dir.path / "poses");
    fs::create_directories(dir.path / "calibration");
    {
        std::ofstream out(dir.path / "poses" / "a.txt");
        out << "1 0 0 0\n0 1 0 0\n0 0 1 0\n";  // only 3 rows
    }
    {
        std::ofstream out(dir.path / "calibration" / "a.txt");
        out << "500 500 320 240 640 480\n";
    }
    CHECK_THROWS_AS(load_dataset(dir.path.string()), ParseError);
    {
        std::ofstream out(dir.path / "poses" / "a.txt");
        out << "1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n";
    }
    std::filesystem::remove(dir.path / "calibration" / "a.txt");
    CHECK_THROWS_AS(load_dataset(dir.path.string()), MissingPose);
}

TEST_CASE("pointcloud export: depth filter, frusta, reparse") {
    TmpDir dir("screloc_ply");
    SyntheticWorld w = generate_world(71, 3000, Vec3(-2, -2, -2), Vec3(2, 2, 2), 64);
    auto world = std::make_shared<SyntheticWorld>(w);
    TrajectorySpec spec;
    spec.frames = 100;
    spec.radius = 6.0;
    spec.intrinsics = {125, 125, 80, 60, 160, 120};  // keep the cloud small
    Rng rng(9);
    std::vector<View> views;
    int i = 0;
    for (const auto& f : generate_trajectory(spec, w, rng)) {
        View v = View::of_frame("f" + std::to_string(i++), f.pose, f.intrinsics);
        v.world = world;
        views.push_back(v);
    }

    // untrained head: zero weights and biases predict mean_translation for
    // every cell, so we can place all predictions at a controlled spot
    HeadConfig hc;
    hc.input_dim = 64;
    hc.width = 16;
    hc.n_hidden = 1;
    Rng hrng(10);
    RegressionHead head = RegressionHead::create(hc, hrng);
    for (auto& wm : head.net.weights()) wm.setZero();
    for (auto& bv : head.net.biases()) bv.setZero();
    head.mean_translation = w.centroid();  // ~6 m from every orbit camera

    const std::string path = (dir.path / "cloud.ply").string();
    export_pointcloud(views, head, Backbone{OracleBackbone{}}, path);
    PlyData ply = parse_ply(path);
    // 100 frames, 1-of-25 rule -> 4 frusta, 5 vertices / 8 edges each
    CHECK(ply.edges.size() == 32);
    CHECK(ply.points.size() > 20 + 100);  // predictions within 10 m survive

    // single identity-pose frame with every prediction at depth 11 m: the
    // 10 m filter drops all points, leaving only the one frustum
    View flat = View::of_frame("flat", Pose::identity(), kCam);
    flat.world = world;
    head.mean_translation = Vec3(0, 0, 11);
    export_pointcloud({flat}, head, Backbone{OracleBackbone{}}, path);
    PlyData far = parse_ply(path);
    CHECK(far.points.size() == 5);  // frustum vertices only
    CHECK(far.edges.size() == 8);

    // frusta can be disabled
    PointCloudConfig cfg;
    cfg.frustum_stride = 0;
    export_pointcloud({flat}, head, Backbone{OracleBackbone{}}, path, cfg);
    PlyData none = parse_ply(path);
    CHECK(none.points.empty());
    CHECK(none.edges.empty());
}
