#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace scr {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

struct PixelCoord {
    double u = 0.0;
    double v = 0.0;

    Vec2 vec() const { return {u, v}; }
};

struct Intrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;

    bool valid() const {
        return fx > 0 && fy > 0 && cx >= 0 && cx < width && cy >= 0 && cy < height;
    }
};

/// Rigid camera-to-world transform: y = R * e + t for camera-space e.
struct Pose {
    Mat3 R = Mat3::Identity();
    Vec3 t = Vec3::Zero();

    static Pose identity() { return {}; }

    static Pose from_matrix(const Mat4& m) {
        Pose p;
        p.R = m.topLeftCorner<3, 3>();
        p.t = m.topRightCorner<3, 1>();
        return p;
    }

    Mat4 matrix() const {
        Mat4 m = Mat4::Identity();
        m.topLeftCorner<3, 3>() = R;
        m.topRightCorner<3, 1>() = t;
        return m;
    }

    Vec3 apply(const Vec3& e) const { return R * e + t; }

    /// Scene point into camera frame.
    Vec3 to_camera(const Vec3& y) const { return R.transpose() * (y - t); }

    Pose inverse() const {
        Pose p;
        p.R = R.transpose();
        p.t = -(R.transpose() * t);
        return p;
    }

    /// Camera center in the scene frame (equal to t for camera-to-world).
    Vec3 center() const { return t; }

    bool is_rigid(double tol = 1e-6) const {
        return (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() < tol &&
               std::abs(R.determinant() - 1.0) < tol;
    }

    /// Re-orthonormalize R (nearest rotation by SVD).
    void orthonormalize() {
        Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Mat3 Rn = svd.matrixU() * svd.matrixV().transpose();
        if (Rn.determinant() < 0) {
            Mat3 flip = Mat3::Identity();
            flip(2, 2) = -1;
            Rn = svd.matrixU() * flip * svd.matrixV().transpose();
        }
        R = Rn;
    }
};

inline Pose compose(const Pose& a, const Pose& b) {
    Pose p;
    p.R = a.R * b.R;
    p.t = a.R * b.t + a.t;
    return p;
}

inline Mat3 rotation_x(double rad) {
    return Eigen::AngleAxisd(rad, Vec3::UnitX()).toRotationMatrix();
}
inline Mat3 rotation_y(double rad) {
    return Eigen::AngleAxisd(rad, Vec3::UnitY()).toRotationMatrix();
}
inline Mat3 rotation_z(double rad) {
    return Eigen::AngleAxisd(rad, Vec3::UnitZ()).toRotationMatrix();
}

struct BehindCamera : std::runtime_error {
    BehindCamera() : std::runtime_error("point behind camera") {}
};
struct NonPositiveDepth : std::runtime_error {
    NonPositiveDepth() : std::runtime_error("depth must be positive") {}
};

/// Pinhole projection of a camera-frame point; requires positive depth.
inline PixelCoord project(const Intrinsics& k, const Vec3& e) {
    if (e.z() <= 0) throw BehindCamera{};
    return {k.fx * e.x() / e.z() + k.cx, k.fy * e.y() / e.z() + k.cy};
}

/// Back-project a pixel to the camera-frame point at the given depth.
inline Vec3 unproject(const Intrinsics& k, const PixelCoord& x, double depth) {
    if (depth <= 0) throw NonPositiveDepth{};
    return {(x.u - k.cx) / k.fx * depth, (x.v - k.cy) / k.fy * depth, depth};
}

inline constexpr double kInvalidReprojection = std::numeric_limits<double>::infinity();

/// Pixel distance between the projection of scene point y under camera-to-world
/// pose h and the observed pixel x. Returns +inf when y falls behind the camera.
inline double reprojection_error(const PixelCoord& x, const Vec3& y, const Pose& h,
                                 const Intrinsics& k) {
    const Vec3 e = h.to_camera(y);
    if (e.z() <= 0) return kInvalidReprojection;
    const PixelCoord p = project(k, e);
    return std::hypot(p.u - x.u, p.v - x.v);
}

struct PoseError {
    double translation_cm = 0;
    double rotation_deg = 0;
};

/// Camera-center distance (cm) and relative rotation angle (deg).
inline PoseError pose_error(const Pose& est, const Pose& gt) {
    PoseError e;
    e.translation_cm = (est.center() - gt.center()).norm() * 100.0;
    const Mat3 rel = est.R.transpose() * gt.R;
    const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
    e.rotation_deg = std::acos(c) * 180.0 / M_PI;
    return e;
}

}  // namespace scr
