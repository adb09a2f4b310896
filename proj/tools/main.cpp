// Command-line front end for the scene-coordinate-regression relocalization
// toolkit. Subcommands cover dataset synthesis, head/backbone training,
// localization, clustering, ensembles, trajectory alignment, evaluation, and
// point-cloud export. Exit codes: 0 success, 1 usage error, 2 data error.

#include <CLI11.hpp>
#include <filesystem>
#include <future>
#include <iostream>

#include "screloc/align.hpp"
#include "screloc/backbone_train.hpp"
#include "screloc/buffer.hpp"
#include "screloc/dataset.hpp"
#include "screloc/ensemble.hpp"
#include "screloc/evaluate.hpp"
#include "screloc/localize.hpp"
#include "screloc/pointcloud.hpp"
#include "screloc/train.hpp"

using namespace scr;

namespace {

// ---------------------------------------------------------------------------
// Shared option bundles
// ---------------------------------------------------------------------------

struct CommonOpts {
    std::uint64_t seed = 0;
    int threads = 1;
};

struct TrainingOpts {
    std::size_t buffer_size = 500000;
    int batch = 1024;
    int epochs = 8;
    double lr_min = 5e-4;
    double lr_max = 5e-3;
    double tau_min = 1.0;
    double tau_max = 50.0;
    std::string schedule = "circular";
    std::string loss = "tanh";
    std::string shuffle = "feature";
};

struct SolverOpts {
    int hypotheses = 64;
    double inlier_threshold = 10.0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
}

void add_training(CLI::App* cmd, TrainingOpts& o) {
    cmd->add_option("--buffer-size", o.buffer_size, "training buffer capacity");
    cmd->add_option("--batch", o.batch, "batch size")->check(CLI::PositiveNumber);
    cmd->add_option("--epochs", o.epochs, "training epochs")->check(CLI::NonNegativeNumber);
    cmd->add_option("--lr-min", o.lr_min, "one-cycle minimum learning rate");
    cmd->add_option("--lr-max", o.lr_max, "one-cycle maximum learning rate");
    cmd->add_option("--tau-min", o.tau_min, "curriculum final threshold (px)");
    cmd->add_option("--tau-max", o.tau_max, "curriculum initial threshold (px)");
    cmd->add_option("--schedule", o.schedule, "tau schedule")
        ->check(CLI::IsMember({"circular", "linear", "fixed"}));
    cmd->add_option("--loss", o.loss, "robust loss kind")
        ->check(CLI::IsMember({"tanh", "dsacstar"}));
    cmd->add_option("--shuffle", o.shuffle, "buffer shuffling mode")
        ->check(CLI::IsMember({"feature", "image"}));
}

void add_solver(CLI::App* cmd, SolverOpts& o) {
    cmd->add_option("--hypotheses", o.hypotheses, "RANSAC hypothesis count")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--inlier-threshold", o.inlier_threshold, "RANSAC inlier threshold (px)");
}

CurriculumConfig to_curriculum(const TrainingOpts& o) {
    CurriculumConfig cur;
    cur.tau_min = o.tau_min;
    cur.tau_max = o.tau_max;
    cur.schedule = o.schedule == "linear"   ? TauSchedule::Linear
                   : o.schedule == "fixed"  ? TauSchedule::Fixed
                                            : TauSchedule::Circular;
    cur.loss = o.loss == "dsacstar" ? LossKind::DsacStarPiecewise : LossKind::Tanh;
    return cur;
}

TrainConfig to_train_config(const TrainingOpts& o, std::uint64_t seed) {
    TrainConfig tc;
    tc.epochs = o.epochs;
    tc.batch = o.batch;
    tc.lr_min = o.lr_min;
    tc.lr_max = o.lr_max;
    tc.curriculum = to_curriculum(o);
    tc.shuffle = o.shuffle == "image" ? ShuffleMode::ImageWise : ShuffleMode::FeatureWise;
    tc.seed = seed;
    return tc;
}

/// --backbone values: oracle | handcrafted | learned:<weights path>
Backbone parse_backbone(const std::string& spec) {
    if (spec == "oracle") return OracleBackbone{};
    if (spec == "handcrafted") return HandcraftedConfig{};
    if (spec.rfind("learned:", 0) == 0) return load_backbone(spec.substr(8));
    throw CLI::ValidationError("--backbone",
                               "expected oracle, handcrafted, or learned:<path>: " + spec);
}

void echo(const std::string& key, const std::string& value) {
    std::cout << "config " << key << " = " << value << "\n";
}

/// Every run prints its full resolved configuration before doing work.
void echo_all(const CLI::App* cmd, const CommonOpts& common) {
    std::cout << "command: " << cmd->get_name() << "\n";
    for (const CLI::Option* opt : cmd->get_options()) {
        if (opt->get_name().rfind("--", 0) != 0) continue;
        std::string value = opt->count() ? opt->results().front() : opt->get_default_str();
        if (opt->count() > 1) {
            value.clear();
            for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
        }
        echo(opt->get_name().substr(2), value.empty() ? "(unset)" : value);
    }
    echo("resolved-seed", std::to_string(common.seed));
}

std::vector<View> dataset_views(const std::string& dir, const std::string& world_json) {
    return load_dataset(dir, world_json).views();
}

/// Drop augmentation when the views cannot be re-extracted after a geometry
/// change (features on disk, no image, no oracle world).
AugmentConfig training_augmentation(const std::vector<View>& views) {
    for (const auto& v : views)
        if (v.features && !v.image && !v.world) {
            std::cout << "note: precomputed features without imagery; augmentation disabled\n";
            return AugmentConfig::none();
        }
    return AugmentConfig::head_training();
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthOpts {
    CommonOpts common;
    std::string out;
    int points = 20000;
    int channels = 128;
    double extent = 5.0;
    int map_frames = 400;
    int query_frames = 200;
    double radius = 6.0;
    std::string payload = "none";
    double pose_noise_trans = 0.0;
    double pose_noise_rot_deg = 0.0;
};

int run_synth(const SynthOpts& o) {
    const double half = o.extent / 2.0;
    SyntheticWorld world =
        generate_world(o.common.seed, o.points, Vec3(-half, -half, -half), Vec3(half, half, half),
                       o.channels);
    auto shared = std::make_shared<SyntheticWorld>(world);

    Rng rng(o.common.seed + 1);
    auto make_views = [&](int frames, const std::string& prefix, bool noisy) {
        TrajectorySpec spec;
        spec.frames = frames;
        spec.radius = o.radius;
        if (noisy) {
            spec.pose_noise_trans = o.pose_noise_trans;
            spec.pose_noise_rot_deg = o.pose_noise_rot_deg;
        }
        std::vector<View> views;
        int i = 0;
        for (const auto& f : generate_trajectory(spec, world, rng)) {
            char id[32];
            std::snprintf(id, sizeof id, "%s%05d", prefix.c_str(), i++);
            // write the (possibly noisy) mapping pose as the dataset pose
            View v = View::of_frame(id, noisy ? f.noisy_pose : f.pose, f.intrinsics);
            v.render_pose = f.pose;  // oracle renders from the true pose
            v.world = shared;
            if (o.payload == "images")
                v.image = std::make_shared<Image>(render_image(world, f.pose, f.intrinsics));
            views.push_back(v);
        }
        return views;
    };

    namespace fs = std::filesystem;
    fs::create_directories(o.out);
    const PayloadKind payload = o.payload == "features" ? PayloadKind::Features
                                : o.payload == "images" ? PayloadKind::Images
                                                        : PayloadKind::None;
    const Backbone oracle{OracleBackbone{}};
    Rng frng(o.common.seed + 2);
    write_dataset(o.out + "/mapping", make_views(o.map_frames, "m", true), payload, &oracle, 8,
                  &frng);
    write_dataset(o.out + "/query", make_views(o.query_frames, "q", false), payload, &oracle, 8,
                  &frng);
    save_world_json(world, o.out + "/world.json");
    std::cout << "wrote " << o.map_frames << " mapping + " << o.query_frames
              << " query frames to " << o.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOpts {
    CommonOpts common;
    TrainingOpts training;
    std::string dataset;
    std::string world;
    std::string out = "map.acem";
    std::string backbone = "oracle";
    std::string clusters;
    int cluster_index = -1;
    int head_width = 256;
    int head_layers = 8;
};

int run_train(const TrainOpts& o) {
    std::vector<View> views = dataset_views(o.dataset, o.world);
    if (!o.clusters.empty()) {
        std::map<std::string, int> label;
        for (const auto& [id, l] : load_clusters(o.clusters)) label[id] = l;
        std::vector<View> subset;
        for (auto& v : views)
            if (label.count(v.id) && label[v.id] == o.cluster_index) subset.push_back(std::move(v));
        views = std::move(subset);
        std::cout << "cluster " << o.cluster_index << ": " << views.size() << " frames\n";
    }
    const Backbone backbone = parse_backbone(o.backbone);

    Rng rng(o.common.seed);
    HeadConfig hc;
    hc.width = o.head_width;
    hc.n_hidden = o.head_layers;

    if (o.training.epochs == 0) {
        // still a valid (untrained) map: correct dims, mean translation set
        if (views.empty()) throw EmptyDataset{};
        const FeatureMap probe = extract_features(views.front(), backbone, 8, &rng);
        hc.input_dim = probe.channels();
        RegressionHead head = RegressionHead::create(hc, rng);
        Vec3 mean = Vec3::Zero();
        for (const auto& v : views) mean += v.pose.center();
        head.mean_translation = mean / static_cast<double>(views.size());
        save_map(head, o.out);
        std::cout << "wrote untrained map to " << o.out << "\n";
        return 0;
    }

    TrainingBuffer buf =
        fill_buffer(views, backbone, o.training.buffer_size, rng, training_augmentation(views));
    buf.seed = o.common.seed;
    std::cout << "buffer: " << buf.size() << " samples, " << buf.channels() << " channels, "
              << buf.visits.size() << " visits\n";

    hc.input_dim = buf.channels();
    RegressionHead head = RegressionHead::create(hc, rng);
    const auto curve = train_head(buf, head, to_train_config(o.training, o.common.seed));
    if (!curve.empty())
        std::cout << "loss: first " << curve.front() << ", last " << curve.back() << " over "
                  << curve.size() << " steps\n";
    save_map(head, o.out);
    std::cout << "wrote map to " << o.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train-backbone
// ---------------------------------------------------------------------------

struct TrainBackboneOpts {
    CommonOpts common;
    std::vector<std::string> scenes;
    std::string world;
    std::string out = "backbone.acen";
    int channels = 128;
    int base = 16;
    int steps = 1000;
    int images_per_head = 6;
    double lr_min = 5e-4;
    double lr_max = 5e-3;
};

int run_train_backbone(const TrainBackboneOpts& o) {
    std::vector<std::vector<View>> scenes;
    for (const auto& dir : o.scenes) {
        std::vector<View> views = dataset_views(dir, o.world);
        for (auto& v : views)
            if (!v.image && v.world)
                v.image = std::make_shared<Image>(render_image(*v.world, v.pose, v.intrinsics));
        scenes.push_back(std::move(views));
    }
    BackboneTrainConfig cfg;
    cfg.out_channels = o.channels;
    cfg.base = o.base;
    cfg.steps = o.steps;
    cfg.images_per_head = o.images_per_head;
    cfg.lr_min = o.lr_min;
    cfg.lr_max = o.lr_max;
    cfg.seed = o.common.seed;
    BackboneTrainResult r = train_backbone(scenes, cfg);
    if (!r.curve.empty())
        std::cout << "loss: first " << r.curve.front() << ", last " << r.curve.back() << "\n";
    save_backbone(r.net, o.out);
    std::cout << "wrote backbone to " << o.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// localize / ensemble-localize
// ---------------------------------------------------------------------------

struct LocalizeOpts {
    CommonOpts common;
    SolverOpts solver;
    std::string dataset;
    std::string world;
    std::vector<std::string> maps;
    std::string backbone = "oracle";
    std::string out = "poses.csv";
    bool timing = false;
};

int run_localize(const LocalizeOpts& o) {
    const Dataset ds = load_dataset(o.dataset, o.world);
    const Backbone backbone = parse_backbone(o.backbone);
    std::vector<RegressionHead> heads;
    for (const auto& m : o.maps) heads.push_back(load_map(m));
    if (heads.empty()) throw NoHeads{};

    SolverConfig cfg;
    cfg.hypotheses = o.solver.hypotheses;
    cfg.inlier_threshold = o.solver.inlier_threshold;

    std::vector<FrameEstimate> estimates(ds.frames.size());
    auto work = [&](std::size_t i) {
        const View v = ds.view(i);
        Rng rng(o.common.seed + i);  // per-frame extraction noise stream
        const FeatureMap fm = extract_features(v, backbone, 8, &rng);
        SolverConfig fc = cfg;
        fc.seed = o.common.seed + i;
        const PoseEstimate e = ensemble_localize(fm, heads, fc);
        FrameEstimate out;
        out.frame_id = v.id;
        out.pose = e.pose;
        out.inlier_count = e.inlier_count;
        out.success = e.success;
        out.time_ms = o.timing ? e.solve_time_ms : 0.0;
        estimates[i] = std::move(out);
    };

    if (o.common.threads <= 1) {
        for (std::size_t i = 0; i < ds.frames.size(); i++) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < o.common.threads; t++)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < ds.frames.size(); i = next++) work(i);
            });
        for (auto& t : pool) t.join();
    }

    write_pose_csv(estimates, o.out);
    int ok = 0;
    for (const auto& e : estimates) ok += e.success ? 1 : 0;
    std::cout << "localized " << ok << "/" << estimates.size() << " frames; wrote " << o.out
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

struct ClusterOpts {
    CommonOpts common;
    std::string dataset;
    int n = 2;
    std::string out = "clusters.txt";
};

int run_cluster(const ClusterOpts& o) {
    const Dataset ds = load_dataset(o.dataset);
    std::vector<Vec3> centers;
    std::vector<std::string> ids;
    for (const auto& f : ds.frames) {
        centers.push_back(f.pose.center());
        ids.push_back(f.frame_id);
    }
    Rng rng(o.common.seed);
    const ClusterAssignment a = hierarchical_cluster(centers, o.n, rng);
    save_clusters(ids, a, o.out);
    std::vector<int> sizes(static_cast<std::size_t>(o.n), 0);
    for (int l : a.labels) sizes[static_cast<std::size_t>(l)]++;
    std::cout << "clusters:";
    for (int s : sizes) std::cout << " " << s;
    std::cout << "; wrote " << o.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// align
// ---------------------------------------------------------------------------

struct AlignOpts {
    CommonOpts common;
    std::string traj_a;
    std::string traj_b;
    double inlier_threshold = 0.10;
};

int run_align(const AlignOpts& o) {
    const auto ea = read_pose_csv(o.traj_a);
    const auto eb = read_pose_csv(o.traj_b);
    std::map<std::string, const FrameEstimate*> by_id;
    for (const auto& e : eb) by_id[e.frame_id] = &e;
    std::vector<Vec3> pa, pb;
    std::vector<Pose> qa, qb;
    for (const auto& e : ea) {
        const auto it = by_id.find(e.frame_id);
        if (it == by_id.end()) continue;
        pa.push_back(e.pose.center());
        pb.push_back(it->second->pose.center());
        qa.push_back(e.pose);
        qb.push_back(it->second->pose);
    }
    std::cout << "matched " << pa.size() << " frames\n";
    AlignConfig cfg;
    cfg.seed = o.common.seed;
    cfg.inlier_threshold = o.inlier_threshold;
    const AlignResult r = ransac_align(pa, pb, cfg, &qa, &qb);
    std::cout << "rotation:\n" << r.transform.R << "\n";
    std::cout << "translation: " << r.transform.t.transpose() << "\n";
    std::cout << "inliers: " << r.inlier_count << "/" << pa.size() << "\n";
    std::cout << "position residual (m): mean " << r.mean_residual << ", median "
              << r.median_residual << ", max " << r.max_residual << "\n";
    std::cout << "rotation residual (deg): mean " << r.mean_rotation_residual_deg << ", median "
              << r.median_rotation_residual_deg << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOpts {
    std::string estimates;
    std::string dataset;
};

int run_eval(const EvalOpts& o) {
    const auto est = read_pose_csv(o.estimates);
    const Dataset ds = load_dataset(o.dataset);
    std::vector<FrameEstimate> gt;
    for (const auto& f : ds.frames) {
        FrameEstimate g;
        g.frame_id = f.frame_id;
        g.pose = f.pose;
        g.success = true;
        gt.push_back(g);
    }
    const EvalReport r = evaluate(est, gt);
    std::cout << "frames: " << r.frames.size() << ", failures: " << r.failure_count << "\n";
    std::cout << "accuracy (5 cm, 5 deg): " << r.accuracy_percent[0] << "%\n";
    std::cout << "accuracy (10 cm, 5 deg): " << r.accuracy_percent[1] << "%\n";
    std::cout << "median translation: " << r.median_translation_cm << " cm\n";
    std::cout << "median rotation: " << r.median_rotation_deg << " deg\n";
    return 0;
}

// ---------------------------------------------------------------------------
// export-cloud
// ---------------------------------------------------------------------------

struct CloudOpts {
    CommonOpts common;
    std::string dataset;
    std::string world;
    std::string map;
    std::string backbone = "oracle";
    std::string out = "cloud.ply";
    double max_depth = 10.0;
    int frustum_stride = 25;
};

int run_export_cloud(const CloudOpts& o) {
    const std::vector<View> views = dataset_views(o.dataset, o.world);
    const RegressionHead head = load_map(o.map);
    const Backbone backbone = parse_backbone(o.backbone);
    PointCloudConfig cfg;
    cfg.max_depth = o.max_depth;
    cfg.frustum_stride = o.frustum_stride;
    Rng rng(o.common.seed);
    export_pointcloud(views, head, backbone, o.out, cfg, &rng);
    std::cout << "wrote " << o.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scene-coordinate-regression relocalization toolkit"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    SynthOpts synth;
    CLI::App* c_synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_common(c_synth, synth.common);
    c_synth->add_option("--out", synth.out, "output directory")->required();
    c_synth->add_option("--points", synth.points, "landmark count");
    c_synth->add_option("--channels", synth.channels, "descriptor channels");
    c_synth->add_option("--extent", synth.extent, "world box edge length (m)");
    c_synth->add_option("--map-frames", synth.map_frames, "mapping frame count");
    c_synth->add_option("--query-frames", synth.query_frames, "query frame count");
    c_synth->add_option("--radius", synth.radius, "trajectory radius (m)");
    c_synth->add_option("--payload", synth.payload, "per-frame payload")
        ->check(CLI::IsMember({"none", "features", "images"}));
    c_synth->add_option("--pose-noise-trans", synth.pose_noise_trans,
                        "mapping pose translation noise sigma (m)");
    c_synth->add_option("--pose-noise-rot", synth.pose_noise_rot_deg,
                        "mapping pose rotation noise sigma (deg)");

    TrainOpts train;
    CLI::App* c_train = app.add_subcommand("train", "train a scene head (the map)");
    add_common(c_train, train.common);
    add_training(c_train, train.training);
    c_train->add_option("--dataset", train.dataset, "mapping split directory")->required();
    c_train->add_option("--world", train.world, "world.json for oracle features");
    c_train->add_option("--out", train.out, "output map path");
    c_train->add_option("--backbone", train.backbone, "oracle|handcrafted|learned:<path>");
    c_train->add_option("--clusters", train.clusters, "cluster assignment file");
    c_train->add_option("--cluster-index", train.cluster_index, "train on this cluster only");
    c_train->add_option("--head-width", train.head_width, "head MLP width");
    c_train->add_option("--head-layers", train.head_layers, "head hidden layer count");

    TrainBackboneOpts trainbb;
    CLI::App* c_trainbb = app.add_subcommand("train-backbone", "train the shared backbone");
    add_common(c_trainbb, trainbb.common);
    c_trainbb->add_option("--scene", trainbb.scenes, "scene split directory (repeatable)")
        ->required();
    c_trainbb->add_option("--world", trainbb.world, "world.json for rendered imagery");
    c_trainbb->add_option("--out", trainbb.out, "output weights path");
    c_trainbb->add_option("--channels", trainbb.channels, "feature channels");
    c_trainbb->add_option("--base", trainbb.base, "base conv width");
    c_trainbb->add_option("--steps", trainbb.steps, "training steps");
    c_trainbb->add_option("--images-per-head", trainbb.images_per_head, "batch images per scene");
    c_trainbb->add_option("--lr-min", trainbb.lr_min, "one-cycle minimum learning rate");
    c_trainbb->add_option("--lr-max", trainbb.lr_max, "one-cycle maximum learning rate");

    LocalizeOpts loc;
    CLI::App* c_loc = app.add_subcommand("localize", "localize query frames against a map");
    LocalizeOpts ens;
    CLI::App* c_ens =
        app.add_subcommand("ensemble-localize", "localize against several maps (max inliers)");
    for (auto [cmd, o] : {std::pair{c_loc, &loc}, std::pair{c_ens, &ens}}) {
        add_common(cmd, o->common);
        add_solver(cmd, o->solver);
        cmd->add_option("--dataset", o->dataset, "query split directory")->required();
        cmd->add_option("--world", o->world, "world.json for oracle features");
        cmd->add_option("--map", o->maps, "map file (repeatable)")->required();
        cmd->add_option("--backbone", o->backbone, "oracle|handcrafted|learned:<path>");
        cmd->add_option("--out", o->out, "output pose CSV");
        cmd->add_flag("--timing", o->timing, "record wall-clock solve times in the CSV");
    }

    ClusterOpts cluster;
    CLI::App* c_cluster = app.add_subcommand("cluster", "cluster mapping frames by position");
    add_common(c_cluster, cluster.common);
    c_cluster->add_option("--dataset", cluster.dataset, "mapping split directory")->required();
    c_cluster->add_option("-n,--clusters", cluster.n, "cluster count")->check(CLI::PositiveNumber);
    c_cluster->add_option("--out", cluster.out, "output assignment file");

    AlignOpts align;
    CLI::App* c_align = app.add_subcommand("align", "rigidly align two trajectories");
    add_common(c_align, align.common);
    c_align->add_option("--traj-a", align.traj_a, "pose CSV to align")->required();
    c_align->add_option("--traj-b", align.traj_b, "reference pose CSV")->required();
    c_align->add_option("--inlier-threshold", align.inlier_threshold,
                        "alignment inlier threshold (m)");

    EvalOpts eval_opts;
    CLI::App* c_eval = app.add_subcommand("eval", "score a pose CSV against ground truth");
    c_eval->add_option("--estimates", eval_opts.estimates, "estimated pose CSV")->required();
    c_eval->add_option("--dataset", eval_opts.dataset, "ground-truth split directory")->required();

    CloudOpts cloud;
    CLI::App* c_cloud = app.add_subcommand("export-cloud", "export predictions as an ASCII PLY");
    add_common(c_cloud, cloud.common);
    c_cloud->add_option("--dataset", cloud.dataset, "split directory")->required();
    c_cloud->add_option("--world", cloud.world, "world.json for oracle features");
    c_cloud->add_option("--map", cloud.map, "map file")->required();
    c_cloud->add_option("--backbone", cloud.backbone, "oracle|handcrafted|learned:<path>");
    c_cloud->add_option("--out", cloud.out, "output PLY path");
    c_cloud->add_option("--max-depth", cloud.max_depth, "camera-frame depth filter (m)");
    c_cloud->add_option("--frustum-stride", cloud.frustum_stride,
                        "emit one frustum per this many frames (0 = none)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (c_synth->parsed()) {
            echo_all(c_synth, synth.common);
            return run_synth(synth);
        }
        if (c_train->parsed()) {
            echo_all(c_train, train.common);
            return run_train(train);
        }
        if (c_trainbb->parsed()) {
            echo_all(c_trainbb, trainbb.common);
            return run_train_backbone(trainbb);
        }
        if (c_loc->parsed()) {
            echo_all(c_loc, loc.common);
            return run_localize(loc);
        }
        if (c_ens->parsed()) {
            echo_all(c_ens, ens.common);
            return run_localize(ens);
        }
        if (c_cluster->parsed()) {
            echo_all(c_cluster, cluster.common);
            return run_cluster(cluster);
        }
        if (c_align->parsed()) {
            echo_all(c_align, align.common);
            return run_align(align);
        }
        if (c_eval->parsed()) {
            echo_all(c_eval, CommonOpts{});
            return run_eval(eval_opts);
        }
        if (c_cloud->parsed()) {
            echo_all(c_cloud, cloud.common);
            return run_export_cloud(cloud);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
