#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "screloc/buffer.hpp"
#include "screloc/curriculum.hpp"
#include "screloc/head.hpp"

namespace scr {

enum class ShuffleMode { FeatureWise, ImageWise };

struct TrainConfig {
    int epochs = 8;       // paper-scale 16
    int batch = 1024;     // paper-scale 5120
    double lr_min = 5e-4;
    double lr_max = 5e-3;
    CurriculumConfig curriculum;
    ValidityConfig validity;
    ShuffleMode shuffle = ShuffleMode::FeatureWise;
    std::uint64_t seed = 0;
};

namespace detail {

/// Optimizer view over an Mlp: weight matrices directly, bias vectors through
/// n x 1 mirrors (the optimizer interface wants uniform matrix tensors).
struct HeadParams {
    std::vector<Eigen::MatrixXf> bias_mirror;
    std::vector<Eigen::MatrixXf*> params;
    std::vector<bool> decayed;

    explicit HeadParams(Mlp<float>& net) {
        for (auto& b : net.biases()) bias_mirror.push_back(b);
        for (auto& w : net.weights()) {
            params.push_back(&w);
            decayed.push_back(true);
        }
        for (auto& b : bias_mirror) {
            params.push_back(&b);
            decayed.push_back(false);
        }
    }

    void write_back(Mlp<float>& net) const {
        for (std::size_t i = 0; i < bias_mirror.size(); i++)
            net.biases()[i] = bias_mirror[i].col(0);
    }
};

inline std::vector<std::size_t> epoch_order(const TrainingBuffer& buf, ShuffleMode mode, Rng& rng) {
    std::vector<std::size_t> order(buf.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (mode == ShuffleMode::FeatureWise) {
        std::shuffle(order.begin(), order.end(), rng);
        return order;
    }
    // image-wise: keep each visit's entries contiguous, shuffle visit order
    std::vector<std::vector<std::size_t>> groups(buf.visits.size());
    for (std::size_t i = 0; i < buf.size(); i++) groups[buf.pose_index[i]].push_back(i);
    std::vector<std::size_t> gorder(groups.size());
    std::iota(gorder.begin(), gorder.end(), std::size_t{0});
    std::shuffle(gorder.begin(), gorder.end(), rng);
    order.clear();
    for (std::size_t g : gorder) order.insert(order.end(), groups[g].begin(), groups[g].end());
    return order;
}

}  // namespace detail

/// Train the head on a filled buffer. Returns the per-step mean batch loss.
/// Predictions are learned relative to the mean mapping camera center, which
/// is stored in the head.
inline std::vector<double> train_head(const TrainingBuffer& buffer, RegressionHead& head,
                                      const TrainConfig& cfg = {}) {
    if (buffer.size() == 0) throw EmptyDataset{};
    if (buffer.channels() != head.input_dim())
        throw DimensionMismatch("train_head: buffer channels != head input dim");
    if (cfg.batch < 1) throw std::invalid_argument("train_head: batch must be positive");
    std::vector<double> curve;
    if (cfg.epochs <= 0) return curve;

    head.mean_translation = buffer.mean_camera_center();

    const std::size_t n = buffer.size();
    const std::size_t batches_per_epoch = (n + cfg.batch - 1) / static_cast<std::size_t>(cfg.batch);
    const std::size_t total_steps = batches_per_epoch * static_cast<std::size_t>(cfg.epochs);
    curve.reserve(total_steps);

    Rng rng(cfg.seed);
    AdamW<float> opt;
    detail::HeadParams hp(head.net);
    Mlp<float>::Gradients grads;
    const int out_dim = head.net.out_dim();

    Eigen::MatrixXf x(buffer.channels(), cfg.batch);
    Eigen::MatrixXf dy(out_dim, cfg.batch);
    std::size_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; epoch++) {
        const auto order = detail::epoch_order(buffer, cfg.shuffle, rng);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch)) {
            const Eigen::Index bsz =
                static_cast<Eigen::Index>(std::min(static_cast<std::size_t>(cfg.batch), n - start));
            for (Eigen::Index b = 0; b < bsz; b++)
                x.col(b) = buffer.feature(order[start + static_cast<std::size_t>(b)]);

            const double t = static_cast<double>(step) / static_cast<double>(total_steps);
            Mlp<float>::Workspace ws;
            const Eigen::MatrixXf raw = head.net.forward(x.leftCols(bsz), &ws);

            double batch_loss = 0;
            for (Eigen::Index b = 0; b < bsz; b++) {
                const std::size_t idx = order[start + static_cast<std::size_t>(b)];
                Vec3 y;
                Eigen::Vector4d raw4 = Eigen::Vector4d::Zero();
                if (head.homogeneous) {
                    raw4 = raw.col(b).cast<double>();
                    y = dehomogenize(raw4, head.wclip);
                } else {
                    y = raw.col(b).head<3>().cast<double>();
                }
                y += head.mean_translation;
                const SampleLoss sl =
                    sample_loss(buffer.supervision(idx), y, t, cfg.curriculum, cfg.validity);
                batch_loss += sl.loss;
                const Vec3 g = sl.grad / static_cast<double>(bsz);
                if (head.homogeneous)
                    dy.col(b) = dehomogenize_backward(raw4, g, head.wclip).cast<float>();
                else
                    dy.col(b).head<3>() = g.cast<float>();
            }
            curve.push_back(batch_loss / static_cast<double>(bsz));

            grads.init_like(head.net);
            head.net.backward(ws, dy.leftCols(bsz), grads);
            std::vector<const Eigen::MatrixXf*> glist;
            for (auto& g : grads.w) glist.push_back(&g);
            for (auto& g : grads.b) glist.push_back(&g);
            const double lr = one_cycle_lr(t, cfg.lr_min, cfg.lr_max);
            opt.step(hp.params, glist, hp.decayed, static_cast<float>(lr));
            hp.write_back(head.net);
            step++;
        }
    }
    return curve;
}

}  // namespace scr
