#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "screloc/common.hpp"
#include "screloc/featmap.hpp"
#include "screloc/geometry.hpp"
#include "screloc/image.hpp"

namespace scr {

// ---------------------------------------------------------------------------
// Seeded synthetic world: landmarks with fixed unit descriptors. The oracle
// backbone reads these descriptors directly, which makes the regression
// head's target exactly learnable.
// ---------------------------------------------------------------------------

struct SyntheticWorld {
    std::uint64_t seed = 0;
    Vec3 extent_min = Vec3::Zero();
    Vec3 extent_max = Vec3::Ones();
    std::vector<Vec3> landmarks;
    Eigen::MatrixXf descriptors;     // channels x n, unit columns
    std::vector<float> intensities;  // blob brightness for rendered images

    int channels() const { return static_cast<int>(descriptors.rows()); }
    Vec3 centroid() const {
        Vec3 c = Vec3::Zero();
        for (const auto& p : landmarks) c += p;
        return landmarks.empty() ? c : Vec3(c / static_cast<double>(landmarks.size()));
    }
};

inline SyntheticWorld generate_world(std::uint64_t seed, int n_points, const Vec3& extent_min,
                                     const Vec3& extent_max, int channels = 128) {
    if (n_points < 1) throw std::invalid_argument("generate_world: need at least one landmark");
    SyntheticWorld w;
    w.seed = seed;
    w.extent_min = extent_min;
    w.extent_max = extent_max;
    Rng rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    w.landmarks.reserve(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; i++) {
        Vec3 p;
        for (int d = 0; d < 3; d++) p[d] = extent_min[d] + uni(rng) * (extent_max[d] - extent_min[d]);
        w.landmarks.push_back(p);
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw_descriptor = [&](Eigen::Index col) {
        Eigen::VectorXf d(channels);
        for (int c = 0; c < channels; c++) d[c] = static_cast<float>(gauss(rng));
        w.descriptors.col(col) = d.normalized();
    };
    w.descriptors = Eigen::MatrixXf(channels, n_points);
    for (int i = 0; i < n_points; i++) draw_descriptor(i);
    w.intensities.resize(static_cast<std::size_t>(n_points));
    for (auto& v : w.intensities) v = static_cast<float>(0.3 + 0.7 * uni(rng));

    // distinctness: min pairwise descriptor distance must exceed 0.1; redraw
    // offenders (blocked Gram products keep this O(n^2 * C) but vectorized)
    if (n_points <= 50000 && channels >= 64) {
        const float max_dot = 1.0f - 0.1f * 0.1f / 2.0f;  // |a-b|^2 = 2-2*a.b
        for (int pass = 0; pass < 16; pass++) {
            bool redrawn = false;
            const Eigen::Index block = 2048;
            for (Eigen::Index i0 = 0; i0 < n_points; i0 += block) {
                const Eigen::Index bi = std::min<Eigen::Index>(block, n_points - i0);
                Eigen::MatrixXf gram =
                    w.descriptors.middleCols(i0, bi).transpose() * w.descriptors;
                for (Eigen::Index r = 0; r < bi; r++)
                    for (Eigen::Index c = 0; c < n_points; c++)
                        if (i0 + r != c && gram(r, c) > max_dot) {
                            draw_descriptor(i0 + r);
                            redrawn = true;
                            break;
                        }
            }
            if (!redrawn) break;
        }
    }
    return w;
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

enum class TrajectoryKind { Orbit, Arc, Grid };

struct TrajectorySpec {
    TrajectoryKind kind = TrajectoryKind::Orbit;
    int frames = 100;
    double radius = 5.0;            // orbit/arc radius (m)
    double arc_span_deg = 120.0;    // arc only
    std::optional<Vec3> target;     // defaults to the world centroid
    double pose_noise_trans = 0.0;  // sigma (m), mapping-pose imperfection
    double pose_noise_rot_deg = 0.0;
    Intrinsics intrinsics{500, 500, 320, 240, 640, 480};
    double min_visible_fraction = 0.3;
};

struct InfeasibleSpec : std::runtime_error {
    InfeasibleSpec() : std::runtime_error("trajectory spec infeasible: visibility unmet") {}
};

/// Camera-to-world look-at pose (camera +z toward target).
inline Pose look_at(const Vec3& center, const Vec3& target, const Vec3& up = Vec3(0, 1, 0)) {
    Pose p;
    const Vec3 z = (target - center).normalized();
    Vec3 x = up.cross(z);
    if (x.norm() < 1e-9) x = Vec3(1, 0, 0);
    x.normalize();
    const Vec3 y = z.cross(x);
    p.R.col(0) = x;
    p.R.col(1) = y;
    p.R.col(2) = z;
    p.t = center;
    return p;
}

inline double visible_fraction(const SyntheticWorld& w, const Pose& pose, const Intrinsics& k) {
    if (w.landmarks.empty()) return 0.0;
    std::size_t n = 0;
    for (const auto& y : w.landmarks) {
        const Vec3 e = pose.to_camera(y);
        if (e.z() <= 0) continue;
        const PixelCoord px = project(k, e);
        if (px.u >= 0 && px.u < k.width && px.v >= 0 && px.v < k.height) n++;
    }
    return static_cast<double>(n) / static_cast<double>(w.landmarks.size());
}

struct TrajectoryFrame {
    Pose pose;       // ground truth camera-to-world
    Pose noisy_pose; // pose with the mapping-noise perturbation applied
    Intrinsics intrinsics;
};

inline std::vector<TrajectoryFrame> generate_trajectory(const TrajectorySpec& spec,
                                                        const SyntheticWorld& world, Rng& rng) {
    if (spec.frames < 1) throw std::invalid_argument("trajectory: need at least one frame");
    const Vec3 target = spec.target.value_or(world.centroid());
    std::vector<TrajectoryFrame> out;
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    auto noisy = [&](const Pose& p) {
        Pose q = p;
        if (spec.pose_noise_trans > 0)
            q.t += spec.pose_noise_trans * Vec3(gauss(rng), gauss(rng), gauss(rng));
        if (spec.pose_noise_rot_deg > 0) {
            Vec3 axis(gauss(rng), gauss(rng), gauss(rng));
            if (axis.norm() > 1e-12) {
                const double ang = gauss(rng) * spec.pose_noise_rot_deg * M_PI / 180.0;
                q.R = Eigen::AngleAxisd(ang, axis.normalized()).toRotationMatrix() * q.R;
            }
        }
        return q;
    };

    const int grid_side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spec.frames))));
    for (int i = 0; i < spec.frames; i++) {
        Pose pose;
        bool ok = false;
        for (int attempt = 0; attempt < 64 && !ok; attempt++) {
            double jitter = attempt == 0 ? 0.0 : 0.2 * uni(rng) - 0.1;
            switch (spec.kind) {
                case TrajectoryKind::Orbit: {
                    const double ang = 2.0 * M_PI * (i + jitter) / spec.frames;
                    // bobbing direction, normalized so the center stays on the sphere
                    const Vec3 dir(std::cos(ang), 0.25 * std::sin(2 * ang), std::sin(ang));
                    const Vec3 c = target + spec.radius * dir.normalized();
                    pose = look_at(c, target);
                    break;
                }
                case TrajectoryKind::Arc: {
                    const double span = spec.arc_span_deg * M_PI / 180.0;
                    const double ang = spec.frames == 1
                                           ? 0.0
                                           : -span / 2 + span * (i + jitter) / (spec.frames - 1);
                    const Vec3 c = target + spec.radius * Vec3(std::sin(ang), 0.0, std::cos(ang));
                    pose = look_at(c, target);
                    break;
                }
                case TrajectoryKind::Grid: {
                    const int gx = i % grid_side, gy = i / grid_side;
                    const double fx = grid_side == 1 ? 0.5 : static_cast<double>(gx) / (grid_side - 1);
                    const double fy = grid_side == 1 ? 0.5 : static_cast<double>(gy) / (grid_side - 1);
                    const Vec3 span = world.extent_max - world.extent_min;
                    Vec3 c = world.extent_min +
                             Vec3(fx * span.x(), fy * span.y(), -spec.radius + jitter);
                    pose = look_at(c, target);
                    break;
                }
            }
            ok = visible_fraction(world, pose, spec.intrinsics) >= spec.min_visible_fraction;
        }
        if (!ok) throw InfeasibleSpec{};
        TrajectoryFrame f;
        f.pose = pose;
        f.noisy_pose = noisy(pose);
        f.intrinsics = spec.intrinsics;
        out.push_back(f);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Oracle observation rendering
// ---------------------------------------------------------------------------

struct ObservationGrid {
    FeatureMap features;
    std::vector<Vec3> gt_coords;   // per cell; valid iff occupied
    std::vector<bool> occupied;    // cell has a landmark
};

struct OracleNoise {
    double descriptor_sigma = 0.0;  // additive Gaussian, renormalized
    double outlier_fraction = 0.0;  // cells replaced by random unit descriptors
};

/// Assign each feature cell the landmark projecting nearest its center
/// (within subsampling/sqrt(2) px), nearest in depth on collision.
inline ObservationGrid render_observations(const SyntheticWorld& world, const Pose& pose,
                                           const Intrinsics& k, int subsampling = 8,
                                           const OracleNoise& noise = {}, Rng* rng = nullptr) {
    ObservationGrid g;
    g.features = FeatureMap::create(k, world.channels(), subsampling);
    const std::size_t n_cells = static_cast<std::size_t>(g.features.rows) * g.features.cols;
    g.gt_coords.assign(n_cells, Vec3::Zero());
    g.occupied.assign(n_cells, false);
    std::vector<double> depth(n_cells, std::numeric_limits<double>::infinity());
    std::vector<int> owner(n_cells, -1);

    const double max_center_dist = subsampling / std::sqrt(2.0);
    for (std::size_t li = 0; li < world.landmarks.size(); li++) {
        const Vec3 e = pose.to_camera(world.landmarks[li]);
        if (e.z() <= 0) continue;
        const PixelCoord px = project(k, e);
        if (px.u < 0 || px.u >= k.width || px.v < 0 || px.v >= k.height) continue;
        const int col = static_cast<int>(px.u / subsampling);
        const int row = static_cast<int>(px.v / subsampling);
        if (row >= g.features.rows || col >= g.features.cols) continue;
        const PixelCoord center = g.features.cell_pixel(row, col);
        if (std::hypot(px.u - center.u, px.v - center.v) > max_center_dist) continue;
        const std::size_t ci = static_cast<std::size_t>(g.features.cell_index(row, col));
        if (e.z() < depth[ci]) {
            depth[ci] = e.z();
            owner[ci] = static_cast<int>(li);
        }
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (std::size_t ci = 0; ci < n_cells; ci++) {
        if (owner[ci] < 0) continue;
        g.occupied[ci] = true;
        g.gt_coords[ci] = world.landmarks[static_cast<std::size_t>(owner[ci])];
        Eigen::VectorXf d = world.descriptors.col(owner[ci]);
        if (rng && noise.outlier_fraction > 0 && uni(*rng) < noise.outlier_fraction) {
            for (int c = 0; c < d.size(); c++) d[c] = static_cast<float>(gauss(*rng));
            d.normalize();
        } else if (rng && noise.descriptor_sigma > 0) {
            for (int c = 0; c < d.size(); c++)
                d[c] += static_cast<float>(noise.descriptor_sigma * gauss(*rng));
            d.normalize();
        }
        g.features.data.col(static_cast<Eigen::Index>(ci)) = d;
    }
    return g;
}

/// Landmark-splat grayscale rendering used by the handcrafted and learned
/// backbone paths.
inline Image render_image(const SyntheticWorld& world, const Pose& pose, const Intrinsics& k) {
    Image im = Image::zeros(k.width, k.height);
    const double sigma = 1.6;
    const int rad = 4;
    for (std::size_t li = 0; li < world.landmarks.size(); li++) {
        const Vec3 e = pose.to_camera(world.landmarks[li]);
        if (e.z() <= 0) continue;
        const PixelCoord px = project(k, e);
        if (px.u < -rad || px.u >= k.width + rad || px.v < -rad || px.v >= k.height + rad) continue;
        const float amp = world.intensities[li];
        const int x0 = std::max(0, static_cast<int>(px.u) - rad);
        const int x1 = std::min(k.width - 1, static_cast<int>(px.u) + rad);
        const int y0 = std::max(0, static_cast<int>(px.v) - rad);
        const int y1 = std::min(k.height - 1, static_cast<int>(px.v) + rad);
        for (int y = y0; y <= y1; y++)
            for (int x = x0; x <= x1; x++) {
                const double d2 = (x - px.u) * (x - px.u) + (y - px.v) * (y - px.v);
                im.at(x, y) += amp * static_cast<float>(std::exp(-d2 / (2 * sigma * sigma)));
            }
    }
    for (auto& v : im.data) v = std::min(v, 1.0f);
    return im;
}

}  // namespace scr
