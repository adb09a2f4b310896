#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <vector>

#include "screloc/backbone.hpp"
#include "screloc/featmap.hpp"
#include "screloc/image.hpp"
#include "screloc/synth.hpp"

namespace scr {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};
struct MissingPose : std::runtime_error {
    explicit MissingPose(const std::string& what) : std::runtime_error(what) {}
};
struct Io : std::runtime_error {
    explicit Io(const std::string& what) : std::runtime_error(what) {}
};

/// One frame of an on-disk dataset split. Payload paths are optional; an
/// oracle world file can substitute for both.
struct DatasetFrame {
    std::string frame_id;
    Pose pose;  // camera-to-world
    Intrinsics intrinsics;
    std::string feature_path;  // .acef, may be empty
    std::string image_path;    // .pgm, may be empty
};

struct Dataset {
    std::vector<DatasetFrame> frames;
    std::shared_ptr<const SyntheticWorld> world;  // present iff world.json exists

    View view(std::size_t i) const {
        const DatasetFrame& f = frames[i];
        View v = View::of_frame(f.frame_id, f.pose, f.intrinsics);
        v.world = world;
        if (!f.feature_path.empty())
            v.features = std::make_shared<FeatureMap>(load_feature_map(f.feature_path));
        if (!f.image_path.empty()) v.image = std::make_shared<Image>(read_pgm(f.image_path));
        return v;
    }

    std::vector<View> views() const {
        std::vector<View> out;
        for (std::size_t i = 0; i < frames.size(); i++) out.push_back(view(i));
        return out;
    }
};

namespace detail {

inline void write_pose_file(const std::filesystem::path& path, const Pose& pose) {
    std::ofstream out(path);
    if (!out) throw Io("cannot write " + path.string());
    const Mat4 m = pose.matrix();
    out << std::setprecision(17);
    for (int r = 0; r < 4; r++) {
        for (int c = 0; c < 4; c++) out << m(r, c) << (c == 3 ? "" : " ");
        out << "\n";
    }
}

inline Pose read_pose_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Io("cannot read " + path.string());
    Mat4 m;
    for (int r = 0; r < 4; r++)
        for (int c = 0; c < 4; c++)
            if (!(in >> m(r, c)))
                throw ParseError(path.string() + ": expected 16 pose values (row " +
                                 std::to_string(r) + ")");
    Pose p;
    p.R = m.block<3, 3>(0, 0);
    p.t = m.block<3, 1>(0, 3);
    if (!p.is_rigid()) p.orthonormalize();
    return p;
}

inline void write_calibration_file(const std::filesystem::path& path, const Intrinsics& k) {
    std::ofstream out(path);
    if (!out) throw Io("cannot write " + path.string());
    out << std::setprecision(17) << k.fx << " " << k.fy << " " << k.cx << " " << k.cy << " "
        << k.width << " " << k.height << "\n";
}

inline Intrinsics read_calibration_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Io("cannot read " + path.string());
    Intrinsics k;
    if (!(in >> k.fx >> k.fy >> k.cx >> k.cy >> k.width >> k.height))
        throw ParseError(path.string() + ": expected 'fx fy cx cy width height'");
    return k;
}

}  // namespace detail

/// World descriptor file: the generation parameters, not the landmark data
/// (the seeded generator reproduces the world exactly).
inline void save_world_json(const SyntheticWorld& w, const std::string& path) {
    nlohmann::json j;
    j["seed"] = w.seed;
    j["n_points"] = w.landmarks.size();
    j["channels"] = w.channels();
    j["extent_min"] = {w.extent_min.x(), w.extent_min.y(), w.extent_min.z()};
    j["extent_max"] = {w.extent_max.x(), w.extent_max.y(), w.extent_max.z()};
    std::ofstream out(path);
    if (!out) throw Io("cannot write " + path);
    out << j.dump(2) << "\n";
}

inline SyntheticWorld load_world_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Io("cannot read " + path);
    nlohmann::json j;
    try {
        in >> j;
        const Vec3 lo(j["extent_min"][0], j["extent_min"][1], j["extent_min"][2]);
        const Vec3 hi(j["extent_max"][0], j["extent_max"][1], j["extent_max"][2]);
        return generate_world(j["seed"].get<std::uint64_t>(), j["n_points"].get<int>(), lo, hi,
                              j["channels"].get<int>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

enum class PayloadKind { None, Features, Images };

/// Write one split (poses/, calibration/, optional features/ or rgb/).
inline void write_dataset(const std::string& dir, const std::vector<View>& frames,
                          PayloadKind payload = PayloadKind::None,
                          const Backbone* backbone = nullptr, int subsampling = 8,
                          Rng* rng = nullptr) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root / "poses");
    fs::create_directories(root / "calibration");
    if (payload == PayloadKind::Features) fs::create_directories(root / "features");
    if (payload == PayloadKind::Images) fs::create_directories(root / "rgb");

    for (const auto& v : frames) {
        detail::write_pose_file(root / "poses" / (v.id + ".txt"), v.pose);
        detail::write_calibration_file(root / "calibration" / (v.id + ".txt"), v.intrinsics);
        if (payload == PayloadKind::Features) {
            if (v.features) {
                save_feature_map(*v.features, (root / "features" / (v.id + ".acef")).string());
            } else if (backbone) {
                save_feature_map(extract_features(v, *backbone, subsampling, rng),
                                 (root / "features" / (v.id + ".acef")).string());
            } else {
                throw Io("write_dataset: no features available for " + v.id);
            }
        } else if (payload == PayloadKind::Images) {
            if (!v.image) throw Io("write_dataset: no image available for " + v.id);
            write_pgm(*v.image, (root / "rgb" / (v.id + ".pgm")).string());
        }
    }
}

/// Load one split directory. `world_json` (typically ../world.json) binds the
/// oracle world when present.
inline Dataset load_dataset(const std::string& dir, const std::string& world_json = "") {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    Dataset ds;
    if (!world_json.empty() && fs::exists(world_json))
        ds.world = std::make_shared<SyntheticWorld>(load_world_json(world_json));
    else if (fs::exists(root / "world.json"))
        ds.world = std::make_shared<SyntheticWorld>(load_world_json((root / "world.json").string()));

    if (!fs::exists(root)) throw Io(dir + ": no such directory");
    if (!fs::exists(root / "poses")) return ds;  // empty dir -> empty list
    for (const auto& entry : fs::directory_iterator(root / "poses")) {
        if (entry.path().extension() != ".txt") continue;
        DatasetFrame f;
        f.frame_id = entry.path().stem().string();
        f.pose = detail::read_pose_file(entry.path());
        const fs::path calib = root / "calibration" / (f.frame_id + ".txt");
        if (!fs::exists(calib)) throw MissingPose(calib.string() + ": missing calibration");
        f.intrinsics = detail::read_calibration_file(calib);
        const fs::path feat = root / "features" / (f.frame_id + ".acef");
        if (fs::exists(feat)) f.feature_path = feat.string();
        for (const char* ext : {".pgm", ".png"}) {
            const fs::path im = root / "rgb" / (f.frame_id + ext);
            if (fs::exists(im)) f.image_path = im.string();
        }
        ds.frames.push_back(std::move(f));
    }
    std::sort(ds.frames.begin(), ds.frames.end(),
              [](const DatasetFrame& a, const DatasetFrame& b) { return a.frame_id < b.frame_id; });
    return ds;
}

// ---------------------------------------------------------------------------
// Pose CSV: frame_id,qw,qx,qy,qz,tx,ty,tz,inliers,success,time_ms.
// Quaternion is the scene-from-camera rotation; t is the camera center.
// ---------------------------------------------------------------------------

struct FrameEstimate {
    std::string frame_id;
    Pose pose;
    int inlier_count = 0;
    bool success = false;
    double time_ms = 0;
};

inline void write_pose_csv(const std::vector<FrameEstimate>& estimates, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Io("cannot write " + path);
    out << "frame_id,qw,qx,qy,qz,tx,ty,tz,inliers,success,time_ms\n";
    out << std::setprecision(9);
    for (const auto& e : estimates) {
        Eigen::Quaterniond q(e.pose.R);
        if (q.w() < 0) q.coeffs() = -q.coeffs();  // canonical sign
        out << e.frame_id << ',' << q.w() << ',' << q.x() << ',' << q.y() << ',' << q.z() << ','
            << e.pose.t.x() << ',' << e.pose.t.y() << ',' << e.pose.t.z() << ',' << e.inlier_count
            << ',' << (e.success ? 1 : 0) << ',' << e.time_ms << '\n';
    }
}

inline std::vector<FrameEstimate> read_pose_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Io("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    std::vector<FrameEstimate> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 11) throw ParseError(path + ": expected 11 fields: " + line);
        FrameEstimate e;
        e.frame_id = fields[0];
        try {
            Eigen::Quaterniond q(std::stod(fields[1]), std::stod(fields[2]), std::stod(fields[3]),
                                 std::stod(fields[4]));
            q.normalize();
            e.pose.R = q.toRotationMatrix();
            e.pose.t = Vec3(std::stod(fields[5]), std::stod(fields[6]), std::stod(fields[7]));
            e.inlier_count = std::stoi(fields[8]);
            e.success = std::stoi(fields[9]) != 0;
            e.time_ms = std::stod(fields[10]);
        } catch (const std::exception&) {
            throw ParseError(path + ": bad numeric field: " + line);
        }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace scr
