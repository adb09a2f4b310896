#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <numeric>
#include <vector>

#include "screloc/common.hpp"
#include "screloc/geometry.hpp"

namespace scr {

struct TooFewFrames : std::runtime_error {
    TooFewFrames() : std::runtime_error("fewer frames than requested clusters") {}
};

struct DegeneratePositions : std::runtime_error {
    DegeneratePositions() : std::runtime_error("all camera positions identical") {}
};

struct ClusterAssignment {
    int n_clusters = 0;
    std::vector<int> labels;  // per frame, in [0, n_clusters)
};

/// 2-means on camera centers: kmeans++ seeding, Lloyd iterations to an
/// assignment fixed point. Returns per-point labels in {0, 1}.
inline std::vector<int> kmeans2(const std::vector<Vec3>& positions, Rng& rng) {
    const std::size_t n = positions.size();
    if (n < 2) throw TooFewFrames{};
    bool distinct = false;
    for (std::size_t i = 1; i < n && !distinct; i++)
        distinct = (positions[i] - positions[0]).squaredNorm() > 0;
    if (!distinct) throw DegeneratePositions{};

    // kmeans++: first center uniform, second weighted by squared distance
    std::uniform_int_distribution<std::size_t> uni(0, n - 1);
    Vec3 c0 = positions[uni(rng)];
    std::vector<double> d2(n);
    double total = 0;
    for (std::size_t i = 0; i < n; i++) {
        d2[i] = (positions[i] - c0).squaredNorm();
        total += d2[i];
    }
    std::uniform_real_distribution<double> pick(0.0, total);
    double target = pick(rng);
    Vec3 c1 = positions[n - 1];
    for (std::size_t i = 0; i < n; i++) {
        target -= d2[i];
        if (target <= 0) {
            c1 = positions[i];
            break;
        }
    }

    std::vector<int> labels(n, 0);
    for (int iter = 0; iter < 100; iter++) {
        bool changed = false;
        for (std::size_t i = 0; i < n; i++) {
            const int l =
                (positions[i] - c0).squaredNorm() <= (positions[i] - c1).squaredNorm() ? 0 : 1;
            if (l != labels[i]) {
                labels[i] = l;
                changed = true;
            }
        }
        // never let a cluster go empty: donate the point farthest from the
        // crowded cluster's center
        for (int side : {0, 1}) {
            if (std::count(labels.begin(), labels.end(), side) > 0) continue;
            const Vec3& center = side == 0 ? c1 : c0;
            std::size_t far = 0;
            double best = -1;
            for (std::size_t i = 0; i < n; i++) {
                const double d = (positions[i] - center).squaredNorm();
                if (d > best) {
                    best = d;
                    far = i;
                }
            }
            labels[far] = side;
            changed = true;
        }
        Vec3 s0 = Vec3::Zero(), s1 = Vec3::Zero();
        int n0 = 0, n1 = 0;
        for (std::size_t i = 0; i < n; i++) {
            if (labels[i] == 0) {
                s0 += positions[i];
                n0++;
            } else {
                s1 += positions[i];
                n1++;
            }
        }
        c0 = s0 / static_cast<double>(n0);
        c1 = s1 / static_cast<double>(n1);
        if (!changed) break;
    }
    return labels;
}

/// Start from one cluster; repeatedly 2-means-split the largest (ties to the
/// lowest cluster index) until N clusters exist.
inline ClusterAssignment hierarchical_cluster(const std::vector<Vec3>& camera_positions, int n,
                                              Rng& rng) {
    if (n < 1 || camera_positions.size() < static_cast<std::size_t>(n)) throw TooFewFrames{};
    ClusterAssignment out;
    out.n_clusters = n;
    out.labels.assign(camera_positions.size(), 0);

    for (int clusters = 1; clusters < n; clusters++) {
        int largest = 0;
        std::size_t largest_count = 0;
        for (int c = 0; c < clusters; c++) {
            const auto count = static_cast<std::size_t>(
                std::count(out.labels.begin(), out.labels.end(), c));
            if (count > largest_count) {  // strict: ties keep the lowest index
                largest = c;
                largest_count = count;
            }
        }
        std::vector<std::size_t> members;
        std::vector<Vec3> pts;
        for (std::size_t i = 0; i < out.labels.size(); i++)
            if (out.labels[i] == largest) {
                members.push_back(i);
                pts.push_back(camera_positions[i]);
            }
        const std::vector<int> split = kmeans2(pts, rng);
        for (std::size_t i = 0; i < members.size(); i++)
            if (split[i] == 1) out.labels[members[i]] = clusters;
    }
    return out;
}

// Cluster file: one line per frame, "frame_id<TAB>cluster_index".
inline void save_clusters(const std::vector<std::string>& frame_ids, const ClusterAssignment& a,
                          const std::string& path) {
    if (frame_ids.size() != a.labels.size())
        throw std::invalid_argument("save_clusters: id/label count mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (std::size_t i = 0; i < frame_ids.size(); i++)
        out << frame_ids[i] << '\t' << a.labels[i] << '\n';
}

inline std::vector<std::pair<std::string, int>> load_clusters(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<std::pair<std::string, int>> out;
    std::string id;
    int label;
    while (in >> id >> label) out.emplace_back(id, label);
    return out;
}

}  // namespace scr
