#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "screloc/common.hpp"

namespace scr {

struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Fully-connected network with ReLU hidden layers and residual additions
// after hidden layers 3 and 6 (those below the layer count). Batches are
// stored column-wise: X is in_dim x B.
//
// Templated on scalar so the gradient checks can run the identical code in
// double precision; training uses float.
// ---------------------------------------------------------------------------

template <typename S>
class Mlp {
public:
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

    Mlp() = default;

    Mlp(int in_dim, int width, int n_hidden, int out_dim)
        : in_dim_(in_dim), width_(width), n_hidden_(n_hidden), out_dim_(out_dim) {
        if (in_dim < 1 || width < 1 || n_hidden < 0 || out_dim < 1)
            throw DimensionMismatch("mlp: bad dimensions");
        weights_.resize(n_hidden_ + 1);
        biases_.resize(n_hidden_ + 1);
        for (int i = 0; i <= n_hidden_; i++) {
            const int rows = (i == n_hidden_) ? out_dim_ : width_;
            const int cols = (i == 0) ? in_dim_ : width_;
            weights_[i] = Mat::Zero(rows, cols);
            biases_[i] = Vec::Zero(rows);
        }
        for (int s : {3, 6})
            if (s < n_hidden_) skips_.push_back(s);
    }

    /// He-normal initialization.
    void init_random(Rng& rng) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (auto& w : weights_) {
            const double scale = std::sqrt(2.0 / static_cast<double>(w.cols()));
            for (Eigen::Index c = 0; c < w.cols(); c++)
                for (Eigen::Index r = 0; r < w.rows(); r++)
                    w(r, c) = static_cast<S>(gauss(rng) * scale);
        }
        for (auto& b : biases_) b.setZero();
    }

    int in_dim() const { return in_dim_; }
    int width() const { return width_; }
    int n_hidden() const { return n_hidden_; }
    int out_dim() const { return out_dim_; }
    const std::vector<int>& skip_layers() const { return skips_; }

    std::vector<Mat>& weights() { return weights_; }
    const std::vector<Mat>& weights() const { return weights_; }
    std::vector<Vec>& biases() { return biases_; }
    const std::vector<Vec>& biases() const { return biases_; }

    struct Workspace {
        Mat input;
        std::vector<Mat> pre;   // z_i per hidden layer
        std::vector<Mat> act;   // a_i per hidden layer (post relu + skip)
    };

    Mat forward(const Mat& x, Workspace* ws = nullptr) const {
        if (x.rows() != in_dim_) throw DimensionMismatch("mlp forward: input width mismatch");
        if (ws) {
            ws->input = x;
            ws->pre.assign(static_cast<std::size_t>(n_hidden_), Mat());
            ws->act.assign(static_cast<std::size_t>(n_hidden_), Mat());
        }
        Mat a = x;
        Mat checkpoint;
        for (int i = 0; i < n_hidden_; i++) {
            Mat z;
            z.noalias() = weights_[static_cast<std::size_t>(i)] * a;
            z.colwise() += biases_[static_cast<std::size_t>(i)];
            if (ws) ws->pre[static_cast<std::size_t>(i)] = z;
            a = z.cwiseMax(S(0));
            const int layer = i + 1;
            if (layer == 1) {
                checkpoint = a;
            } else if (is_skip(layer)) {
                a += checkpoint;
                checkpoint = a;
            }
            if (ws) ws->act[static_cast<std::size_t>(i)] = a;
        }
        Mat y;
        y.noalias() = weights_.back() * a;
        y.colwise() += biases_.back();
        return y;
    }

    struct Gradients {
        std::vector<Mat> w;
        std::vector<Mat> b;  // column vectors

        void init_like(const Mlp& net) {
            w.clear();
            b.clear();
            for (const auto& m : net.weights_) w.push_back(Mat::Zero(m.rows(), m.cols()));
            for (const auto& v : net.biases_) b.push_back(Mat::Zero(v.rows(), 1));
        }
        void scale(S s) {
            for (auto& m : w) m *= s;
            for (auto& m : b) m *= s;
        }
    };

    /// Accumulates parameter gradients into g and returns the gradient with
    /// respect to the input batch.
    Mat backward(const Workspace& ws, const Mat& dy, Gradients& g) const {
        if (dy.rows() != out_dim_) throw DimensionMismatch("mlp backward: output grad mismatch");
        const std::size_t last = weights_.size() - 1;
        const Mat& a_last = n_hidden_ > 0 ? ws.act.back() : ws.input;
        g.w[last].noalias() += dy * a_last.transpose();
        g.b[last] += dy.rowwise().sum();
        Mat da;
        da.noalias() = weights_[last].transpose() * dy;

        // Gradients flowing into checkpoint activations via later skip adds.
        std::vector<Mat> skip_grad(static_cast<std::size_t>(n_hidden_ + 1));
        for (int i = n_hidden_ - 1; i >= 0; i--) {
            const int layer = i + 1;
            Mat total = std::move(da);
            if (skip_grad[static_cast<std::size_t>(layer)].size() > 0)
                total += skip_grad[static_cast<std::size_t>(layer)];
            if (layer == 1 || is_skip(layer)) {
                // a_layer was a checkpoint; if a skip consumed it, that
                // contribution is already in skip_grad above.
            }
            if (is_skip(layer)) {
                const int src = skip_source(layer);
                auto& sg = skip_grad[static_cast<std::size_t>(src)];
                if (sg.size() == 0)
                    sg = total;
                else
                    sg += total;
            }
            Mat dz = (ws.pre[static_cast<std::size_t>(i)].array() > S(0))
                         .select(total, Mat::Zero(total.rows(), total.cols()));
            const Mat& a_prev = (i == 0) ? ws.input : ws.act[static_cast<std::size_t>(i - 1)];
            g.w[static_cast<std::size_t>(i)].noalias() += dz * a_prev.transpose();
            g.b[static_cast<std::size_t>(i)] += dz.rowwise().sum();
            da.noalias() = weights_[static_cast<std::size_t>(i)].transpose() * dz;
        }
        return da;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& w : weights_) n += static_cast<std::size_t>(w.size());
        for (const auto& b : biases_) n += static_cast<std::size_t>(b.size());
        return n;
    }

    /// Quantize all parameters through binary16 (storage precision).
    void quantize_f16() {
        for (auto& w : weights_)
            for (Eigen::Index i = 0; i < w.size(); i++)
                w.data()[i] = static_cast<S>(f16_roundtrip(static_cast<float>(w.data()[i])));
        for (auto& b : biases_)
            for (Eigen::Index i = 0; i < b.size(); i++)
                b.data()[i] = static_cast<S>(f16_roundtrip(static_cast<float>(b.data()[i])));
    }

    template <typename T>
    Mlp<T> cast() const {
        Mlp<T> out(in_dim_, width_, n_hidden_, out_dim_);
        for (std::size_t i = 0; i < weights_.size(); i++) {
            out.weights()[i] = weights_[i].template cast<T>();
            out.biases()[i] = biases_[i].template cast<T>();
        }
        return out;
    }

private:
    bool is_skip(int layer) const {
        for (int s : skips_)
            if (s == layer) return true;
        return false;
    }

    int skip_source(int layer) const {
        int src = 1;
        for (int s : skips_) {
            if (s == layer) return src;
            src = s;
        }
        return src;
    }

    int in_dim_ = 0, width_ = 0, n_hidden_ = 0, out_dim_ = 0;
    std::vector<Mat> weights_;
    std::vector<Vec> biases_;
    std::vector<int> skips_;
};

// ---------------------------------------------------------------------------
// AdamW with decoupled weight decay: p -= lr*wd*p before the Adam update.
// ---------------------------------------------------------------------------

template <typename S>
struct AdamWConfig {
    S beta1 = S(0.9);
    S beta2 = S(0.999);
    S eps = S(1e-8);
    S weight_decay = S(1e-2);
};

template <typename S>
class AdamW {
public:
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

    explicit AdamW(AdamWConfig<S> cfg = {}) : cfg_(cfg) {}

    const AdamWConfig<S>& config() const { return cfg_; }
    long step_count() const { return step_; }

    /// One update over a parameter/gradient tensor list. Decay is applied to
    /// every tensor in `decayed` positions (biases typically excluded).
    void step(const std::vector<Mat*>& params, const std::vector<const Mat*>& grads,
              const std::vector<bool>& decayed, S lr) {
        if (params.size() != grads.size() || params.size() != decayed.size())
            throw DimensionMismatch("adamw: tensor list mismatch");
        if (m_.empty()) {
            for (const auto* p : params) {
                m_.push_back(Mat::Zero(p->rows(), p->cols()));
                v_.push_back(Mat::Zero(p->rows(), p->cols()));
            }
        }
        step_++;
        const S bc1 = S(1) - static_cast<S>(std::pow(static_cast<double>(cfg_.beta1), step_));
        const S bc2 = S(1) - static_cast<S>(std::pow(static_cast<double>(cfg_.beta2), step_));
        for (std::size_t i = 0; i < params.size(); i++) {
            Mat& p = *params[i];
            const Mat& g = *grads[i];
            if (p.rows() != g.rows() || p.cols() != g.cols())
                throw DimensionMismatch("adamw: gradient shape mismatch");
            if (decayed[i] && cfg_.weight_decay != S(0)) p -= lr * cfg_.weight_decay * p;
            m_[i] = cfg_.beta1 * m_[i] + (S(1) - cfg_.beta1) * g;
            v_[i] = cfg_.beta2 * v_[i] + (S(1) - cfg_.beta2) * g.cwiseProduct(g);
            p.array() -= lr * (m_[i].array() / bc1) /
                         ((v_[i].array() / bc2).sqrt() + cfg_.eps);
        }
    }

private:
    AdamWConfig<S> cfg_;
    long step_ = 0;
    std::vector<Mat> m_, v_;
};

/// One-cycle schedule: linear ramp lr_min -> lr_max over the first half,
/// cosine descent back to lr_min over the second half.
inline double one_cycle_lr(double t, double lr_min, double lr_max) {
    t = std::clamp(t, 0.0, 1.0);
    if (t <= 0.5) return lr_min + 2.0 * t * (lr_max - lr_min);
    return lr_min + (lr_max - lr_min) * 0.5 * (1.0 + std::cos(M_PI * (2.0 * t - 1.0)));
}

}  // namespace scr
