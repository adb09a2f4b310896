#pragma once

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "screloc/dataset.hpp"
#include "screloc/localize.hpp"

namespace scr {

struct PointCloudConfig {
    double max_depth = 10.0;    // meters from the image plane
    int frustum_stride = 25;    // one frustum per this many frames
    double frustum_depth = 0.3;  // meters; size of the drawn pyramid
    int subsampling = 8;
};

namespace detail {

struct PlyVertex {
    Vec3 p;
    std::array<int, 3> rgb;
};

}  // namespace detail

/// Accumulate per-cell scene-coordinate predictions over all frames into an
/// ASCII PLY. Points deeper than `max_depth` in their source camera frame are
/// dropped; every `frustum_stride`-th frame contributes a wireframe frustum.
/// Points are colored from the frame imagery when present, uniform gray
/// otherwise.
inline void export_pointcloud(const std::vector<View>& frames, const RegressionHead& head,
                              const Backbone& backbone, const std::string& out_path,
                              const PointCloudConfig& cfg = {}, Rng* rng = nullptr) {
    std::vector<detail::PlyVertex> vertices;
    std::vector<std::array<int, 2>> edges;

    for (std::size_t fi = 0; fi < frames.size(); fi++) {
        const View& v = frames[fi];
        const FeatureMap fm = extract_features(v, backbone, cfg.subsampling, rng);
        const Eigen::MatrixXd coords = head.predict(fm.data);
        const Pose world_to_cam = v.pose.inverse();
        for (int r = 0; r < fm.rows; r++)
            for (int c = 0; c < fm.cols; c++) {
                const Vec3 y = coords.col(fm.cell_index(r, c));
                if (std::abs(world_to_cam.apply(y).z()) > cfg.max_depth) continue;
                detail::PlyVertex vert;
                vert.p = y;
                vert.rgb = {128, 128, 128};
                if (v.image) {
                    const PixelCoord px = fm.cell_pixel(r, c);
                    const int x = std::clamp(static_cast<int>(px.u), 0, v.image->width - 1);
                    const int yy = std::clamp(static_cast<int>(px.v), 0, v.image->height - 1);
                    const int g = std::clamp(static_cast<int>(v.image->at(x, yy) * 255.0f), 0, 255);
                    vert.rgb = {g, g, g};
                }
                vertices.push_back(vert);
            }

        if (cfg.frustum_stride > 0 && fi % static_cast<std::size_t>(cfg.frustum_stride) == 0) {
            const int base = static_cast<int>(vertices.size());
            const Intrinsics& k = v.intrinsics;
            const double d = cfg.frustum_depth;
            const std::array<Vec3, 5> local{
                Vec3::Zero(), unproject(k, {0, 0}, d), unproject(k, {double(k.width), 0}, d),
                unproject(k, {double(k.width), double(k.height)}, d),
                unproject(k, {0, double(k.height)}, d)};
            for (const Vec3& p : local) vertices.push_back({v.pose.apply(p), {255, 64, 64}});
            for (int i = 1; i <= 4; i++) {
                edges.push_back({base, base + i});                     // apex to corners
                edges.push_back({base + i, base + (i % 4) + 1});       // image-plane rectangle
            }
        }
    }

    std::ofstream out(out_path);
    if (!out) throw Io("cannot write " + out_path);
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << vertices.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "element edge " << edges.size() << "\n";
    out << "property int vertex1\nproperty int vertex2\n";
    out << "end_header\n";
    out << std::setprecision(9);
    for (const auto& vert : vertices)
        out << vert.p.x() << ' ' << vert.p.y() << ' ' << vert.p.z() << ' ' << vert.rgb[0] << ' '
            << vert.rgb[1] << ' ' << vert.rgb[2] << '\n';
    for (const auto& e : edges) out << e[0] << ' ' << e[1] << '\n';
}

// ---------------------------------------------------------------------------
// Minimal ASCII PLY reparser, enough to validate our own output.
// ---------------------------------------------------------------------------

struct PlyData {
    std::vector<Vec3> points;
    std::vector<std::array<int, 3>> colors;
    std::vector<std::array<int, 2>> edges;
};

inline PlyData parse_ply(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Io("cannot read " + path);
    std::string line;
    std::size_t n_vertex = 0, n_edge = 0;
    bool header_done = false;
    if (!std::getline(in, line) || line != "ply") throw ParseError(path + ": missing ply magic");
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "element") {
            std::string name;
            std::size_t count;
            ss >> name >> count;
            if (name == "vertex") n_vertex = count;
            if (name == "edge") n_edge = count;
        } else if (tok == "end_header") {
            header_done = true;
            break;
        } else if (tok != "format" && tok != "property" && tok != "comment") {
            throw ParseError(path + ": unexpected header line: " + line);
        }
    }
    if (!header_done) throw ParseError(path + ": missing end_header");
    PlyData ply;
    for (std::size_t i = 0; i < n_vertex; i++) {
        double x, y, z;
        int r, g, b;
        if (!(in >> x >> y >> z >> r >> g >> b))
            throw ParseError(path + ": truncated vertex list");
        ply.points.emplace_back(x, y, z);
        ply.colors.push_back({r, g, b});
    }
    for (std::size_t i = 0; i < n_edge; i++) {
        int a, b;
        if (!(in >> a >> b)) throw ParseError(path + ": truncated edge list");
        if (a < 0 || b < 0 || a >= static_cast<int>(n_vertex) || b >= static_cast<int>(n_vertex))
            throw ParseError(path + ": edge index out of range");
        ply.edges.push_back({a, b});
    }
    return ply;
}

}  // namespace scr
