#pragma once

#include <vector>

#include "screloc/featmap.hpp"
#include "screloc/head.hpp"
#include "screloc/solver.hpp"

namespace scr {

struct NoHeads : std::runtime_error {
    NoHeads() : std::runtime_error("ensemble needs at least one head") {}
};

/// Dense correspondences: every cell with a non-zero feature contributes
/// (cell-center pixel, predicted scene coordinate). All-zero columns carry no
/// signal (sparse feature grids leave unobserved cells empty) and would only
/// dilute RANSAC sampling.
inline CorrespondenceSet predict_correspondences(const FeatureMap& fm, const RegressionHead& head) {
    if (fm.channels() != head.input_dim())
        throw DimensionMismatch("localize: feature channels != head input dim");
    CorrespondenceSet corrs;
    corrs.intrinsics = fm.source_intrinsics;
    const Eigen::MatrixXd coords = head.predict(fm.data);
    for (int r = 0; r < fm.rows; r++)
        for (int c = 0; c < fm.cols; c++) {
            const Eigen::Index cell = fm.cell_index(r, c);
            if (fm.data.col(cell).squaredNorm() == 0) continue;
            corrs.add(fm.cell_pixel(r, c), coords.col(cell));
        }
    return corrs;
}

inline PoseEstimate localize_frame(const FeatureMap& fm, const RegressionHead& head,
                                   const SolverConfig& cfg = {}) {
    const CorrespondenceSet corrs = predict_correspondences(fm, head);
    Rng rng(cfg.seed);
    try {
        return ransac(corrs, cfg, rng);
    } catch (const TooFewCorrespondences&) {
        PoseEstimate e;
        e.success = false;
        return e;
    }
}

/// "Poker" selection: localize with each head and keep the estimate with the
/// most inliers (ties go to the lowest head index).
inline PoseEstimate ensemble_localize(const FeatureMap& fm,
                                      const std::vector<RegressionHead>& heads,
                                      const SolverConfig& cfg = {}) {
    if (heads.empty()) throw NoHeads{};
    PoseEstimate best;
    bool first = true;
    for (const auto& head : heads) {
        PoseEstimate e = localize_frame(fm, head, cfg);
        if (first || e.inlier_count > best.inlier_count) {
            best = e;
            first = false;
        }
    }
    return best;
}

}  // namespace scr
