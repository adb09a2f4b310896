#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "screloc/dataset.hpp"
#include "screloc/geometry.hpp"

namespace scr {

struct UnknownFrame : std::runtime_error {
    explicit UnknownFrame(const std::string& id)
        : std::runtime_error("estimate for unknown frame: " + id) {}
};

struct ErrorThreshold {
    double translation_cm = 5.0;
    double rotation_deg = 5.0;
};

struct FrameEval {
    std::string frame_id;
    double translation_cm = std::numeric_limits<double>::infinity();
    double rotation_deg = std::numeric_limits<double>::infinity();
    int inliers = 0;
    bool success = false;
};

struct EvalReport {
    std::vector<FrameEval> frames;         // one entry per ground-truth frame
    std::vector<double> accuracy_percent;  // parallel to the threshold list
    double median_translation_cm = 0;
    double median_rotation_deg = 0;
    int failure_count = 0;
};

inline const std::vector<ErrorThreshold> kDefaultThresholds{{5.0, 5.0}, {10.0, 5.0}};

/// Compare pose estimates against ground truth. Every estimate key must exist
/// in the ground truth; ground-truth frames without an estimate count as
/// failures. Failed frames exceed every threshold and enter medians as +inf.
inline EvalReport evaluate(const std::vector<FrameEstimate>& estimates,
                           const std::vector<FrameEstimate>& ground_truth,
                           const std::vector<ErrorThreshold>& thresholds = kDefaultThresholds) {
    std::map<std::string, const FrameEstimate*> gt;
    for (const auto& g : ground_truth) gt[g.frame_id] = &g;
    std::map<std::string, const FrameEstimate*> est;
    for (const auto& e : estimates) {
        if (!gt.count(e.frame_id)) throw UnknownFrame(e.frame_id);
        est[e.frame_id] = &e;
    }

    EvalReport report;
    for (const auto& [id, g] : gt) {
        FrameEval fe;
        fe.frame_id = id;
        const auto it = est.find(id);
        if (it != est.end() && it->second->success) {
            const PoseError pe = pose_error(it->second->pose, g->pose);
            fe.translation_cm = pe.translation_cm;
            fe.rotation_deg = pe.rotation_deg;
            fe.inliers = it->second->inlier_count;
            fe.success = true;
        }
        if (!fe.success) report.failure_count++;
        report.frames.push_back(std::move(fe));
    }

    const auto n = static_cast<double>(report.frames.size());
    for (const auto& th : thresholds) {
        int within = 0;
        for (const auto& fe : report.frames)
            if (fe.success && fe.translation_cm < th.translation_cm &&
                fe.rotation_deg < th.rotation_deg)
                within++;
        report.accuracy_percent.push_back(n > 0 ? 100.0 * within / n : 0.0);
    }

    auto median = [](std::vector<double> v) {
        if (v.empty()) return 0.0;
        std::sort(v.begin(), v.end());
        const std::size_t m = v.size();
        return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
    };
    std::vector<double> trans, rot;
    for (const auto& fe : report.frames) {
        trans.push_back(fe.translation_cm);
        rot.push_back(fe.rotation_deg);
    }
    report.median_translation_cm = median(trans);
    report.median_rotation_deg = median(rot);
    return report;
}

}  // namespace scr
