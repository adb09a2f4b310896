#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "screloc/common.hpp"
#include "screloc/geometry.hpp"

namespace scr {

struct CorrespondenceSet {
    std::vector<PixelCoord> pixels;
    std::vector<Vec3> points;
    Intrinsics intrinsics;

    std::size_t size() const { return pixels.size(); }
    void add(const PixelCoord& x, const Vec3& y) {
        pixels.push_back(x);
        points.push_back(y);
    }
};

struct SolverConfig {
    int hypotheses = 64;
    double inlier_threshold = 10.0;  // px
    int min_inliers = 6;
    int refine_rounds = 8;
    int lm_max_iters = 100;
    double lm_step_tolerance = 1e-6;
    std::uint64_t seed = 0;
};

struct PoseEstimate {
    Pose pose;
    int inlier_count = 0;
    bool success = false;
    double solve_time_ms = 0;
};

struct Degenerate : std::runtime_error {
    explicit Degenerate(const std::string& what) : std::runtime_error(what) {}
};
struct NoRealSolution : std::runtime_error {
    NoRealSolution() : std::runtime_error("p3p: no real solution") {}
};
struct TooFewCorrespondences : std::runtime_error {
    TooFewCorrespondences() : std::runtime_error("need at least 4 correspondences") {}
};
struct InsufficientInliers : std::runtime_error {
    InsufficientInliers() : std::runtime_error("need at least 4 inliers for refinement") {}
};

namespace detail {

inline Mat3 skew(const Vec3& v) {
    Mat3 m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

/// Real roots of x^4 + a x^3 + b x^2 + c x + d via the companion matrix.
inline std::vector<double> quartic_real_roots(double a, double b, double c, double d) {
    Eigen::Matrix4d comp = Eigen::Matrix4d::Zero();
    comp(0, 3) = -d;
    comp(1, 3) = -c;
    comp(2, 3) = -b;
    comp(3, 3) = -a;
    comp(1, 0) = comp(2, 1) = comp(3, 2) = 1.0;
    Eigen::EigenSolver<Eigen::Matrix4d> es(comp);
    std::vector<double> roots;
    for (int i = 0; i < 4; i++) {
        const auto ev = es.eigenvalues()[i];
        if (std::abs(ev.imag()) < 1e-8 * (1.0 + std::abs(ev.real()))) roots.push_back(ev.real());
    }
    return roots;
}

/// Rigid camera-to-world transform mapping camera points to scene points
/// (least squares over the given pairs).
inline Pose absolute_orientation(const std::vector<Vec3>& cam, const std::vector<Vec3>& scene) {
    Vec3 cm = Vec3::Zero(), sm = Vec3::Zero();
    for (std::size_t i = 0; i < cam.size(); i++) {
        cm += cam[i];
        sm += scene[i];
    }
    cm /= static_cast<double>(cam.size());
    sm /= static_cast<double>(cam.size());
    Mat3 h = Mat3::Zero();
    for (std::size_t i = 0; i < cam.size(); i++) h += (cam[i] - cm) * (scene[i] - sm).transpose();
    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0) d(2, 2) = -1;
    Pose p;
    p.R = svd.matrixV() * d * svd.matrixU().transpose();
    p.t = sm - p.R * cm;
    return p;
}

}  // namespace detail

/// P3P (Grunert's distance formulation): camera-to-world pose candidates from
/// three 2D-3D correspondences. Up to four solutions.
inline std::vector<Pose> p3p_solve(const std::array<PixelCoord, 3>& pixels,
                                   const std::array<Vec3, 3>& points, const Intrinsics& k) {
    // degenerate input checks
    for (int i = 0; i < 3; i++)
        for (int j = i + 1; j < 3; j++)
            if ((points[i] - points[j]).norm() < 1e-9) throw Degenerate("coincident scene points");
    {
        const Vec3 v1 = points[1] - points[0], v2 = points[2] - points[0];
        if (v1.cross(v2).norm() < 1e-9 * v1.norm() * v2.norm())
            throw Degenerate("collinear scene points");
    }

    std::array<Vec3, 3> bearing;
    for (int i = 0; i < 3; i++)
        bearing[i] = Vec3((pixels[i].u - k.cx) / k.fx, (pixels[i].v - k.cy) / k.fy, 1.0).normalized();

    const double ca = bearing[1].dot(bearing[2]);  // angle opposite side a (P2-P3)
    const double cb = bearing[0].dot(bearing[2]);  // opposite side b (P1-P3)
    const double cg = bearing[0].dot(bearing[1]);  // opposite side c (P1-P2)
    const double a2 = (points[1] - points[2]).squaredNorm();
    const double b2 = (points[0] - points[2]).squaredNorm();
    const double c2 = (points[0] - points[1]).squaredNorm();

    // quartic in v = s3/s1 (resultant of the two distance-ratio quadratics)
    const double A4 = a2 * a2 - 2 * a2 * b2 - 2 * a2 * c2 + b2 * b2 - 4 * b2 * c2 * ca * ca +
                      2 * b2 * c2 + c2 * c2;
    const double A3 = 4 * (-a2 * a2 * cb + a2 * b2 * ca * cg + a2 * b2 * cb + 2 * a2 * c2 * cb -
                           b2 * b2 * ca * cg + 2 * b2 * c2 * ca * ca * cb + b2 * c2 * ca * cg -
                           b2 * c2 * cb - c2 * c2 * cb);
    const double A2 = 2 * (2 * a2 * a2 * cb * cb + a2 * a2 - 4 * a2 * b2 * ca * cb * cg -
                           2 * a2 * b2 * cg * cg - 4 * a2 * c2 * cb * cb - 2 * a2 * c2 +
                           2 * b2 * b2 * ca * ca + 2 * b2 * b2 * cg * cg - b2 * b2 -
                           2 * b2 * c2 * ca * ca - 4 * b2 * c2 * ca * cb * cg +
                           2 * c2 * c2 * cb * cb + c2 * c2);
    const double A1 = 4 * (-a2 * a2 * cb + a2 * b2 * ca * cg + 2 * a2 * b2 * cb * cg * cg -
                           a2 * b2 * cb + 2 * a2 * c2 * cb - b2 * b2 * ca * cg + b2 * c2 * ca * cg +
                           b2 * c2 * cb - c2 * c2 * cb);
    const double A0 = a2 * a2 - 4 * a2 * b2 * cg * cg + 2 * a2 * b2 - 2 * a2 * c2 + b2 * b2 -
                      2 * b2 * c2 + c2 * c2;

    if (std::abs(A4) < 1e-14 * std::max({std::abs(A3), std::abs(A2), std::abs(A1), std::abs(A0)}))
        throw Degenerate("degenerate quartic");

    std::vector<Pose> out;
    for (double v : detail::quartic_real_roots(A3 / A4, A2 / A4, A1 / A4, A0 / A4)) {
        if (v <= 0) continue;
        // linear elimination of u^2 between the two quadratics
        const double lin_u = 2 * b2 * c2 * (cg - v * ca);
        const double lin_c = b2 * (c2 * v * v - a2) +
                             (c2 - a2) * (c2 * (1 + v * v - 2 * v * cb) - b2);
        std::vector<double> us;
        if (std::abs(lin_u) > 1e-10 * (1.0 + std::abs(lin_c))) {
            us.push_back(-lin_c / lin_u);
        } else {
            // fall back to the quadratic in u from the second ratio equation
            const double qa = -b2, qb = 2 * b2 * cg,
                         qc = c2 * (1 + v * v - 2 * v * cb) - b2;
            const double disc = qb * qb - 4 * qa * qc;
            if (disc < 0) continue;
            us.push_back((-qb + std::sqrt(disc)) / (2 * qa));
            us.push_back((-qb - std::sqrt(disc)) / (2 * qa));
        }
        for (double u : us) {
            if (u <= 0) continue;
            const double denom = 1 + u * u - 2 * u * cg;
            if (denom <= 0) continue;
            const double s1 = std::sqrt(c2 / denom);
            const double s2 = u * s1, s3 = v * s1;
            // verify the remaining distance equation
            const Vec3 p1 = s1 * bearing[0], p2 = s2 * bearing[1], p3 = s3 * bearing[2];
            if (std::abs((p2 - p3).squaredNorm() - a2) > 1e-6 * (1.0 + a2)) continue;
            out.push_back(detail::absolute_orientation({p1, p2, p3},
                                                       {points[0], points[1], points[2]}));
        }
    }
    if (out.empty()) throw NoRealSolution{};
    return out;
}

inline int count_inliers(const Pose& pose, const CorrespondenceSet& corrs, double threshold_px) {
    int n = 0;
    for (std::size_t i = 0; i < corrs.size(); i++)
        if (reprojection_error(corrs.pixels[i], corrs.points[i], pose, corrs.intrinsics) <
            threshold_px)
            n++;
    return n;
}

/// Levenberg-Marquardt over the squared reprojection error of the current
/// inlier set, with up to `refine_rounds` refit / re-select-inlier rounds.
/// Pose parameterized as 6-dof axis-angle + translation of camera-from-world.
inline Pose refine_lm(const Pose& initial, const CorrespondenceSet& corrs, double threshold_px,
                      const SolverConfig& cfg = {},
                      std::vector<double>* accepted_objectives = nullptr) {
    auto select_inliers = [&](const Pose& p) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < corrs.size(); i++)
            if (reprojection_error(corrs.pixels[i], corrs.points[i], p, corrs.intrinsics) <
                threshold_px)
                idx.push_back(i);
        return idx;
    };

    Pose pose = initial;
    std::vector<std::size_t> inliers = select_inliers(pose);
    if (inliers.size() < 4) throw InsufficientInliers{};

    const Intrinsics& k = corrs.intrinsics;
    auto objective = [&](const Mat3& R_cw, const Vec3& t_cw, const std::vector<std::size_t>& set) {
        double sum = 0;
        for (std::size_t i : set) {
            const Vec3 p = R_cw * corrs.points[i] + t_cw;
            if (p.z() <= 1e-9) return std::numeric_limits<double>::infinity();
            const double du = k.fx * p.x() / p.z() + k.cx - corrs.pixels[i].u;
            const double dv = k.fy * p.y() / p.z() + k.cy - corrs.pixels[i].v;
            sum += du * du + dv * dv;
        }
        return sum;
    };

    for (int round = 0; round < cfg.refine_rounds; round++) {
        Mat3 R = pose.R.transpose();       // camera-from-world
        Vec3 t = -(pose.R.transpose() * pose.t);
        double lambda = 1e-3;
        double f = objective(R, t, inliers);
        for (int iter = 0; iter < cfg.lm_max_iters; iter++) {
            Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
            Eigen::Matrix<double, 6, 1> jtr = Eigen::Matrix<double, 6, 1>::Zero();
            for (std::size_t i : inliers) {
                const Vec3 p = R * corrs.points[i] + t;
                if (p.z() <= 1e-9) continue;
                const double iz = 1.0 / p.z();
                Eigen::Matrix<double, 2, 3> jp;
                jp << k.fx * iz, 0, -k.fx * p.x() * iz * iz,
                      0, k.fy * iz, -k.fy * p.y() * iz * iz;
                Eigen::Matrix<double, 3, 6> jx;  // d p / d [omega; t], left perturbation
                jx.leftCols<3>() = -detail::skew(p);
                jx.rightCols<3>() = Mat3::Identity();
                const Eigen::Matrix<double, 2, 6> j = jp * jx;
                Vec2 r(k.fx * p.x() * iz + k.cx - corrs.pixels[i].u,
                       k.fy * p.y() * iz + k.cy - corrs.pixels[i].v);
                jtj += j.transpose() * j;
                jtr += j.transpose() * r;
            }
            bool stepped = false;
            for (int attempt = 0; attempt < 10; attempt++) {
                Eigen::Matrix<double, 6, 6> a = jtj;
                a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
                const Eigen::Matrix<double, 6, 1> delta = a.ldlt().solve(-jtr);
                const Vec3 omega = delta.head<3>();
                Mat3 Rn = Eigen::AngleAxisd(omega.norm(),
                                            omega.norm() > 1e-15 ? Vec3(omega.normalized())
                                                                 : Vec3::UnitX())
                              .toRotationMatrix() *
                          R;
                const Vec3 tn = t + delta.tail<3>();
                const double fn = objective(Rn, tn, inliers);
                if (fn <= f) {
                    R = Rn;
                    t = tn;
                    f = fn;
                    if (accepted_objectives) accepted_objectives->push_back(f);
                    lambda = std::max(lambda / 10.0, 1e-12);
                    stepped = delta.norm() >= cfg.lm_step_tolerance;
                    break;
                }
                lambda *= 10.0;
            }
            if (!stepped) break;
        }
        Pose refined;
        refined.R = R.transpose();
        refined.t = -(R.transpose() * t);
        refined.orthonormalize();
        pose = refined;
        std::vector<std::size_t> next = select_inliers(pose);
        if (next.size() < 4) break;
        if (next == inliers) break;
        inliers = std::move(next);
    }
    return pose;
}

/// RANSAC with P3P minimal samples (plus one disambiguation point) and
/// LM refinement of the winner.
inline PoseEstimate ransac(const CorrespondenceSet& corrs, const SolverConfig& cfg, Rng& rng) {
    const auto t0 = std::chrono::steady_clock::now();
    if (corrs.size() < 4) throw TooFewCorrespondences{};

    PoseEstimate best;
    int best_inliers = -1;
    std::uniform_int_distribution<std::size_t> pick(0, corrs.size() - 1);
    for (int h = 0; h < cfg.hypotheses; h++) {
        // 4 distinct indices: 3 for the solver, 1 to disambiguate candidates
        std::array<std::size_t, 4> idx{};
        for (int i = 0; i < 4; i++) {
            bool fresh;
            do {
                idx[static_cast<std::size_t>(i)] = pick(rng);
                fresh = true;
                for (int j = 0; j < i; j++)
                    if (idx[static_cast<std::size_t>(j)] == idx[static_cast<std::size_t>(i)])
                        fresh = false;
            } while (!fresh);
        }
        std::vector<Pose> candidates;
        try {
            candidates = p3p_solve({corrs.pixels[idx[0]], corrs.pixels[idx[1]], corrs.pixels[idx[2]]},
                                   {corrs.points[idx[0]], corrs.points[idx[1]], corrs.points[idx[2]]},
                                   corrs.intrinsics);
        } catch (const Degenerate&) {
            continue;
        } catch (const NoRealSolution&) {
            continue;
        }
        // lowest reprojection on the 4th point selects among candidates
        const Pose* chosen = nullptr;
        double best_check = std::numeric_limits<double>::infinity();
        for (const Pose& c : candidates) {
            const double e =
                reprojection_error(corrs.pixels[idx[3]], corrs.points[idx[3]], c, corrs.intrinsics);
            if (e < best_check) {
                best_check = e;
                chosen = &c;
            }
        }
        if (!chosen) continue;
        const int inl = count_inliers(*chosen, corrs, cfg.inlier_threshold);
        if (inl > best_inliers) {  // ties keep the first sampled hypothesis
            best_inliers = inl;
            best.pose = *chosen;
        }
    }

    if (best_inliers >= 4) {
        try {
            best.pose = refine_lm(best.pose, corrs, cfg.inlier_threshold, cfg);
        } catch (const InsufficientInliers&) {
        }
    }
    best.inlier_count = best_inliers < 0 ? 0 : count_inliers(best.pose, corrs, cfg.inlier_threshold);
    best.success = best.inlier_count >= cfg.min_inliers;
    best.solve_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return best;
}

}  // namespace scr
