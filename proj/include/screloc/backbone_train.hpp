#pragma once

#include <Eigen/Dense>
#include <vector>

#include "screloc/backbone.hpp"
#include "screloc/convnet.hpp"
#include "screloc/train.hpp"

namespace scr {

struct EmptyScene : std::runtime_error {
    EmptyScene() : std::runtime_error("backbone training needs non-empty scenes") {}
};

struct BackboneTrainConfig {
    int out_channels = 128;
    int base = 16;
    int head_width = 128;   // throwaway heads; paper-scale 512
    int head_hidden = 6;    // skip connection lands after layer 3
    int steps = 100;
    int images_per_head = 6;
    double lr_min = 5e-4;
    double lr_max = 5e-3;
    CurriculumConfig curriculum;
    ValidityConfig validity;
    AugmentConfig augment = AugmentConfig::backbone_training();
    std::uint64_t seed = 0;
    int subsampling = 8;
};

struct BackboneTrainResult {
    BackboneNet<float> net;
    std::vector<RegressionHead> heads;  // one throwaway head per scene
    std::vector<double> curve;          // mean per-cell loss per step
};

namespace detail {

/// Bias mirrors for the conv layers, mirroring HeadParams for the Mlp.
struct BackboneParams {
    std::vector<Eigen::MatrixXf> bias_mirror;
    std::vector<Eigen::MatrixXf*> params;
    std::vector<bool> decayed;

    explicit BackboneParams(BackboneNet<float>& net) {
        for (auto* l : net.layers()) bias_mirror.push_back(l->bias());
        for (auto* l : net.layers()) {
            params.push_back(&l->weight());
            decayed.push_back(true);
        }
        for (auto& b : bias_mirror) {
            params.push_back(&b);
            decayed.push_back(false);
        }
    }

    void write_back(BackboneNet<float>& net) const {
        auto layers = net.layers();
        for (std::size_t i = 0; i < layers.size(); i++) layers[i]->bias() = bias_mirror[i].col(0);
    }
};

}  // namespace detail

/// Joint training of one backbone against N per-scene regression heads. Each
/// step draws images_per_head frames per scene; head gradients update their
/// own head, while backbone gradients accumulate across all heads before a
/// single shared update.
inline BackboneTrainResult train_backbone(const std::vector<std::vector<View>>& scenes,
                                          const BackboneTrainConfig& cfg = {}) {
    if (scenes.empty()) throw EmptyScene{};
    for (const auto& s : scenes)
        if (s.empty()) throw EmptyScene{};

    Rng rng(cfg.seed);
    BackboneTrainResult out;
    out.net = BackboneNet<float>(cfg.out_channels, cfg.base);
    out.net.init_random(rng);

    HeadConfig hc;
    hc.input_dim = cfg.out_channels;
    hc.width = cfg.head_width;
    hc.n_hidden = cfg.head_hidden;
    for (const auto& scene : scenes) {
        RegressionHead h = RegressionHead::create(hc, rng);
        Vec3 mean = Vec3::Zero();
        for (const auto& v : scene) mean += v.pose.center();
        h.mean_translation = mean / static_cast<double>(scene.size());
        out.heads.push_back(std::move(h));
    }

    AdamW<float> bb_opt;
    detail::BackboneParams bp(out.net);
    std::vector<AdamW<float>> head_opts(scenes.size());
    std::vector<detail::HeadParams> head_params;
    for (auto& h : out.heads) head_params.emplace_back(h.net);

    BackboneNet<float>::Gradients bb_grads;
    for (int step = 0; step < cfg.steps; step++) {
        const double t = static_cast<double>(step) / static_cast<double>(cfg.steps);
        const auto lr = static_cast<float>(one_cycle_lr(t, cfg.lr_min, cfg.lr_max));
        bb_grads.init_like(out.net);
        double step_loss = 0;
        std::size_t step_cells = 0;

        for (std::size_t si = 0; si < scenes.size(); si++) {
            RegressionHead& head = out.heads[si];
            Mlp<float>::Gradients head_grads;
            head_grads.init_like(head.net);

            // pre-augment the batch so the total cell count (the gradient
            // normalizer) is known before any forward pass runs; the images
            // are then processed one at a time to bound workspace memory
            std::vector<View> batch;
            std::size_t batch_cells = 0;
            std::uniform_int_distribution<std::size_t> pick(0, scenes[si].size() - 1);
            for (int b = 0; b < cfg.images_per_head; b++) {
                View v = augment_view(scenes[si][pick(rng)], rng, cfg.augment);
                if (!v.image) throw std::runtime_error("backbone training needs images");
                const std::size_t cells =
                    static_cast<std::size_t>((v.image->height + cfg.subsampling - 1) /
                                             cfg.subsampling) *
                    static_cast<std::size_t>((v.image->width + cfg.subsampling - 1) /
                                             cfg.subsampling);
                batch_cells += cells;
                batch.push_back(std::move(v));
            }
            const float inv = 1.0f / static_cast<float>(batch_cells);

            double batch_loss = 0;
            for (const View& v : batch) {
                ConvTensor<float> in;
                in.h = v.image->height;
                in.w = v.image->width;
                in.data = Eigen::Map<const Eigen::Matrix<float, 1, Eigen::Dynamic>>(
                    v.image->data.data(), static_cast<Eigen::Index>(v.image->data.size()));

                BackboneNet<float>::Workspace bb_ws;
                Mlp<float>::Workspace head_ws;
                ConvTensor<float> feat = out.net.forward(in, &bb_ws);
                const Eigen::MatrixXf raw = head.net.forward(feat.data, &head_ws);
                Eigen::MatrixXf dy = Eigen::MatrixXf::Zero(raw.rows(), raw.cols());

                for (Eigen::Index c = 0; c < raw.cols(); c++) {
                    const int row = static_cast<int>(c) / feat.w;
                    const int col = static_cast<int>(c) % feat.w;
                    Supervision sup{pixel_of_cell(row, col, cfg.subsampling), v.intrinsics, v.pose};
                    Eigen::Vector4d raw4 = Eigen::Vector4d::Zero();
                    Vec3 y;
                    if (head.homogeneous) {
                        raw4 = raw.col(c).cast<double>();
                        y = dehomogenize(raw4, head.wclip);
                    } else {
                        y = raw.col(c).head<3>().cast<double>();
                    }
                    y += head.mean_translation;
                    const SampleLoss sl = sample_loss(sup, y, t, cfg.curriculum, cfg.validity);
                    batch_loss += sl.loss;
                    if (head.homogeneous)
                        dy.col(c) = dehomogenize_backward(raw4, sl.grad, head.wclip).cast<float>();
                    else
                        dy.col(c).head<3>() = sl.grad.cast<float>();
                }
                dy *= inv;
                const Eigen::MatrixXf dfeat = head.net.backward(head_ws, dy, head_grads);
                ConvTensor<float> dt;
                dt.h = feat.h;
                dt.w = feat.w;
                dt.data = dfeat;
                out.net.backward(bb_ws, dt, bb_grads);
            }
            step_loss += batch_loss;
            step_cells += batch_cells;

            std::vector<const Eigen::MatrixXf*> glist;
            for (auto& g : head_grads.w) glist.push_back(&g);
            for (auto& g : head_grads.b) glist.push_back(&g);
            head_opts[si].step(head_params[si].params, glist, head_params[si].decayed, lr);
            head_params[si].write_back(head.net);
        }

        std::vector<const Eigen::MatrixXf*> glist;
        for (auto& g : bb_grads.conv) {
            glist.push_back(&g.w);
        }
        for (auto& g : bb_grads.conv) {
            glist.push_back(&g.b);
        }
        bb_opt.step(bp.params, glist, bp.decayed, lr);
        bp.write_back(out.net);
        out.curve.push_back(step_loss / static_cast<double>(step_cells));
    }
    return out;
}

}  // namespace scr
