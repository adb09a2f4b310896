#pragma once

#include <cmath>
#include <stdexcept>

#include "screloc/geometry.hpp"

namespace scr {

enum class TauSchedule { Circular, Linear, Fixed };
enum class LossKind { Tanh, DsacStarPiecewise };

struct CurriculumConfig {
    double tau_min = 1.0;   // px
    double tau_max = 50.0;  // px
    TauSchedule schedule = TauSchedule::Circular;
    LossKind loss = LossKind::Tanh;
    double dsacstar_threshold = 100.0;  // px, piecewise switch point
    bool dsacstar_literal_sqrt = false; // sqrt(e) instead of sqrt(thr*e) past it
};

struct ValidityConfig {
    double depth_min = 0.1;     // m
    double depth_max = 1000.0;  // m
    double reproj_max = 1000.0; // px
    double dummy_depth = 10.0;  // m
    bool invalid_l1 = false;    // invalid-branch norm; default L2
};

/// Clamping threshold at training progress t in [0,1].
inline double tau(double t, const CurriculumConfig& cfg = {}) {
    t = std::clamp(t, 0.0, 1.0);
    switch (cfg.schedule) {
        case TauSchedule::Circular:
            return std::sqrt(1.0 - t * t) * cfg.tau_max + cfg.tau_min;
        case TauSchedule::Linear:
            return (1.0 - t) * cfg.tau_max + cfg.tau_min;
        case TauSchedule::Fixed:
        default:
            return cfg.tau_max;
    }
}

/// Robust reprojection term and its derivative in the error.
inline double robust_reproj(double e, double tau_px, const CurriculumConfig& cfg = {}) {
    if (cfg.loss == LossKind::Tanh) return tau_px * std::tanh(e / tau_px);
    const double thr = cfg.dsacstar_threshold;
    if (e <= thr) return e;
    return cfg.dsacstar_literal_sqrt ? std::sqrt(e) : std::sqrt(thr * e);
}

inline double robust_reproj_grad(double e, double tau_px, const CurriculumConfig& cfg = {}) {
    if (cfg.loss == LossKind::Tanh) {
        const double th = std::tanh(e / tau_px);
        return 1.0 - th * th;
    }
    const double thr = cfg.dsacstar_threshold;
    if (e <= thr) return 1.0;
    return cfg.dsacstar_literal_sqrt ? 0.5 / std::sqrt(e) : 0.5 * std::sqrt(thr / e);
}

/// Ground-truth context of one training sample (augmented-frame quantities).
struct Supervision {
    PixelCoord pixel;
    Intrinsics intrinsics;
    Pose gt_pose;  // camera-to-world
};

struct SampleLoss {
    double loss = 0;
    Vec3 grad = Vec3::Zero();  // d loss / d prediction
    bool valid_branch = false;
};

inline bool prediction_valid(const Supervision& s, const Vec3& y, const ValidityConfig& v) {
    const Vec3 e_cam = s.gt_pose.to_camera(y);
    if (!(e_cam.z() >= v.depth_min && e_cam.z() <= v.depth_max)) return false;
    return reprojection_error(s.pixel, y, s.gt_pose, s.intrinsics) < v.reproj_max;
}

/// Per-sample curriculum loss. `y` is the prediction with the mean translation
/// already restored. The validity branch and tau are constants under the
/// gradient (hard selection; tau depends only on t).
inline SampleLoss sample_loss(const Supervision& s, const Vec3& y, double t,
                              const CurriculumConfig& cur = {}, const ValidityConfig& val = {}) {
    SampleLoss out;
    if (prediction_valid(s, y, val)) {
        out.valid_branch = true;
        const double tau_px = tau(t, cur);
        const Vec3 e_cam = s.gt_pose.to_camera(y);
        const PixelCoord p = project(s.intrinsics, e_cam);
        const Vec2 r(p.u - s.pixel.u, p.v - s.pixel.v);
        const double e = r.norm();
        out.loss = robust_reproj(e, tau_px, cur);
        if (e > 1e-12) {
            const double z = e_cam.z();
            Eigen::Matrix<double, 2, 3> jproj;
            jproj << s.intrinsics.fx / z, 0, -s.intrinsics.fx * e_cam.x() / (z * z),
                     0, s.intrinsics.fy / z, -s.intrinsics.fy * e_cam.y() / (z * z);
            const Vec3 de_dy = (r.transpose() / e) * jproj * s.gt_pose.R.transpose();
            out.grad = robust_reproj_grad(e, tau_px, cur) * de_dy;
        }
    } else {
        const Vec3 dummy =
            s.gt_pose.apply(unproject(s.intrinsics, s.pixel, val.dummy_depth));
        const Vec3 d = y - dummy;
        if (val.invalid_l1) {
            out.loss = d.cwiseAbs().sum();
            out.grad = d.array().sign();
        } else {
            out.loss = d.norm();
            if (out.loss > 1e-12) out.grad = d / out.loss;
        }
    }
    return out;
}

}  // namespace scr
