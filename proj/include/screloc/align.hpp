#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "screloc/ensemble.hpp"
#include "screloc/geometry.hpp"
#include "screloc/solver.hpp"

namespace scr {

/// Least-squares rigid transform (no scale) mapping src onto dst, via SVD of
/// the cross-covariance with reflection correction.
inline Pose kabsch(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
    if (src.size() != dst.size() || src.size() < 3) throw Degenerate("alignment points are degenerate");
    const auto n = static_cast<double>(src.size());
    Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
    for (std::size_t i = 0; i < src.size(); i++) {
        cs += src[i];
        cd += dst[i];
    }
    cs /= n;
    cd /= n;
    Mat3 cov = Mat3::Zero();
    for (std::size_t i = 0; i < src.size(); i++) cov += (dst[i] - cd) * (src[i] - cs).transpose();
    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    // collinear (or coincident) points leave the rotation under-determined
    if (svd.singularValues()[1] < 1e-12 * std::max(1.0, svd.singularValues()[0])) throw Degenerate("alignment points are degenerate");
    Mat3 d = Mat3::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2, 2) = -1;
    Pose p;
    p.R = svd.matrixU() * d * svd.matrixV().transpose();
    p.t = cd - p.R * cs;
    return p;
}

struct AlignConfig {
    int triplets = 1000;
    double inlier_threshold = 0.10;  // meters
    std::uint64_t seed = 0;
};

struct AlignResult {
    Pose transform;  // maps trajectory A positions onto trajectory B
    int inlier_count = 0;
    std::vector<bool> inlier_mask;
    // position residual stats over all correspondences (meters)
    double mean_residual = 0;
    double median_residual = 0;
    double max_residual = 0;
    // diagnostic rotation residuals (degrees), from full poses when given
    double mean_rotation_residual_deg = 0;
    double median_rotation_residual_deg = 0;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// RANSAC alignment of corresponding camera positions: score `triplets`
/// random Kabsch hypotheses by 10 cm inlier count, refit the winner on its
/// inliers. Full poses, when provided, add diagnostic rotation residuals.
inline AlignResult ransac_align(const std::vector<Vec3>& traj_a, const std::vector<Vec3>& traj_b,
                                const AlignConfig& cfg = {},
                                const std::vector<Pose>* poses_a = nullptr,
                                const std::vector<Pose>* poses_b = nullptr) {
    if (traj_a.size() != traj_b.size()) throw std::invalid_argument("ransac_align: size mismatch");
    const std::size_t n = traj_a.size();
    if (n < 3) throw TooFewFrames{};

    Rng rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    auto count_with = [&](const Pose& p) {
        int count = 0;
        for (std::size_t i = 0; i < n; i++)
            if ((p.apply(traj_a[i]) - traj_b[i]).norm() < cfg.inlier_threshold) count++;
        return count;
    };

    Pose best;
    int best_count = -1;
    for (int h = 0; h < cfg.triplets; h++) {
        std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
        if (i == j || j == k || i == k) continue;
        try {
            const Pose p = kabsch({traj_a[i], traj_a[j], traj_a[k]},
                                  {traj_b[i], traj_b[j], traj_b[k]});
            const int count = count_with(p);
            if (count > best_count) {
                best_count = count;
                best = p;
            }
        } catch (const Degenerate&) {
            continue;
        }
    }
    if (best_count < 3) throw Degenerate("alignment points are degenerate");

    // refit on the winning hypothesis's inliers
    std::vector<Vec3> in_a, in_b;
    for (std::size_t i = 0; i < n; i++)
        if ((best.apply(traj_a[i]) - traj_b[i]).norm() < cfg.inlier_threshold) {
            in_a.push_back(traj_a[i]);
            in_b.push_back(traj_b[i]);
        }
    if (in_a.size() >= 3) {
        try {
            best = kabsch(in_a, in_b);
        } catch (const Degenerate&) {
        }
    }

    AlignResult out;
    out.transform = best;
    out.inlier_mask.resize(n);
    std::vector<double> residuals(n);
    for (std::size_t i = 0; i < n; i++) {
        residuals[i] = (best.apply(traj_a[i]) - traj_b[i]).norm();
        out.inlier_mask[i] = residuals[i] < cfg.inlier_threshold;
        if (out.inlier_mask[i]) out.inlier_count++;
        out.mean_residual += residuals[i];
        out.max_residual = std::max(out.max_residual, residuals[i]);
    }
    out.mean_residual /= static_cast<double>(n);
    out.median_residual = detail::median_of(residuals);

    if (poses_a && poses_b && poses_a->size() == n && poses_b->size() == n) {
        std::vector<double> rot(n);
        for (std::size_t i = 0; i < n; i++) {
            const Mat3 ra = best.R * (*poses_a)[i].R;
            rot[i] = pose_error(Pose{ra, Vec3::Zero()}, Pose{(*poses_b)[i].R, Vec3::Zero()})
                         .rotation_deg;
            out.mean_rotation_residual_deg += rot[i];
        }
        out.mean_rotation_residual_deg /= static_cast<double>(n);
        out.median_rotation_residual_deg = detail::median_of(rot);
    }
    return out;
}

}  // namespace scr
