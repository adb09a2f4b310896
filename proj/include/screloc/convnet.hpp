#pragma once

#include <Eigen/Dense>
#include <vector>

#include "screloc/common.hpp"
#include "screloc/nn.hpp"

namespace scr {

// ---------------------------------------------------------------------------
// Minimal conv machinery (im2col + GEMM) for the learned backbone. Feature
// planes are stored channels x (H*W), row-major over pixels.
// ---------------------------------------------------------------------------

template <typename S>
struct ConvTensor {
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
    int h = 0, w = 0;
    Mat data;  // channels x (h*w)

    static ConvTensor zeros(int channels, int h, int w) {
        ConvTensor t;
        t.h = h;
        t.w = w;
        t.data = Mat::Zero(channels, static_cast<Eigen::Index>(h) * w);
        return t;
    }
    int channels() const { return static_cast<int>(data.rows()); }
};

template <typename S>
class Conv2d {
public:
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

    Conv2d() = default;
    Conv2d(int in_ch, int out_ch, int kernel, int stride)
        : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride) {
        weight_ = Mat::Zero(out_ch, in_ch * kernel * kernel);
        bias_ = Vec::Zero(out_ch);
    }

    void init_random(Rng& rng) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double scale = std::sqrt(2.0 / static_cast<double>(weight_.cols()));
        for (Eigen::Index i = 0; i < weight_.size(); i++)
            weight_.data()[i] = static_cast<S>(gauss(rng) * scale);
        bias_.setZero();
    }

    int out_h(int h) const { return (h + 2 * pad() - kernel_) / stride_ + 1; }
    int out_w(int w) const { return (w + 2 * pad() - kernel_) / stride_ + 1; }
    int pad() const { return (kernel_ - 1) / 2; }
    int stride() const { return stride_; }
    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }

    Mat& weight() { return weight_; }
    const Mat& weight() const { return weight_; }
    Vec& bias() { return bias_; }
    const Vec& bias() const { return bias_; }

    Mat im2col(const ConvTensor<S>& x) const {
        const int oh = out_h(x.h), ow = out_w(x.w), p = pad();
        Mat col = Mat::Zero(static_cast<Eigen::Index>(in_ch_) * kernel_ * kernel_,
                            static_cast<Eigen::Index>(oh) * ow);
        for (int oy = 0; oy < oh; oy++) {
            for (int ox = 0; ox < ow; ox++) {
                const Eigen::Index oc = static_cast<Eigen::Index>(oy) * ow + ox;
                Eigen::Index row = 0;
                for (int c = 0; c < in_ch_; c++)
                    for (int ky = 0; ky < kernel_; ky++)
                        for (int kx = 0; kx < kernel_; kx++, row++) {
                            const int iy = oy * stride_ - p + ky;
                            const int ix = ox * stride_ - p + kx;
                            if (iy < 0 || ix < 0 || iy >= x.h || ix >= x.w) continue;
                            col(row, oc) = x.data(c, static_cast<Eigen::Index>(iy) * x.w + ix);
                        }
            }
        }
        return col;
    }

    struct Workspace {
        Mat col;
        int in_h = 0, in_w = 0;
    };

    ConvTensor<S> forward(const ConvTensor<S>& x, Workspace* ws = nullptr) const {
        ConvTensor<S> y = ConvTensor<S>::zeros(out_ch_, out_h(x.h), out_w(x.w));
        Mat col = im2col(x);
        y.data.noalias() = weight_ * col;
        y.data.colwise() += bias_;
        if (ws) {
            ws->col = std::move(col);
            ws->in_h = x.h;
            ws->in_w = x.w;
        }
        return y;
    }

    struct Gradients {
        Mat w;
        Mat b;
        void init_like(const Conv2d& c) {
            w = Mat::Zero(c.weight_.rows(), c.weight_.cols());
            b = Mat::Zero(c.bias_.rows(), 1);
        }
    };

    ConvTensor<S> backward(const Workspace& ws, const ConvTensor<S>& dy, Gradients& g) const {
        g.w.noalias() += dy.data * ws.col.transpose();
        g.b += dy.data.rowwise().sum();
        Mat dcol;
        dcol.noalias() = weight_.transpose() * dy.data;
        // col2im scatter
        ConvTensor<S> dx = ConvTensor<S>::zeros(in_ch_, ws.in_h, ws.in_w);
        const int oh = dy.h, ow = dy.w, p = pad();
        for (int oy = 0; oy < oh; oy++) {
            for (int ox = 0; ox < ow; ox++) {
                const Eigen::Index oc = static_cast<Eigen::Index>(oy) * ow + ox;
                Eigen::Index row = 0;
                for (int c = 0; c < in_ch_; c++)
                    for (int ky = 0; ky < kernel_; ky++)
                        for (int kx = 0; kx < kernel_; kx++, row++) {
                            const int iy = oy * stride_ - p + ky;
                            const int ix = ox * stride_ - p + kx;
                            if (iy < 0 || ix < 0 || iy >= ws.in_h || ix >= ws.in_w) continue;
                            dx.data(c, static_cast<Eigen::Index>(iy) * ws.in_w + ix) += dcol(row, oc);
                        }
            }
        }
        return dx;
    }

private:
    int in_ch_ = 0, out_ch_ = 0, kernel_ = 3, stride_ = 1;
    Mat weight_;
    Vec bias_;
};

// ---------------------------------------------------------------------------
// The dense feature extractor: grayscale input, total spatial stride 8.
// conv3x3 c16 s1 - conv3x3 c32 s2 - conv3x3 c64 s2 - conv3x3 c128 s2 -
// two residual 3x3 blocks at 1/8 - 1x1 projection to out_channels.
// ---------------------------------------------------------------------------

template <typename S>
class BackboneNet {
public:
    using Tensor = ConvTensor<S>;
    using Mat = typename Conv2d<S>::Mat;

    BackboneNet() = default;

    explicit BackboneNet(int out_channels, int base = 16)
        : out_channels_(out_channels),
          c1_(1, base, 3, 1),
          c2_(base, base * 2, 3, 2),
          c3_(base * 2, base * 4, 3, 2),
          c4_(base * 4, base * 8, 3, 2),
          r1a_(base * 8, base * 8, 3, 1),
          r1b_(base * 8, base * 8, 3, 1),
          r2a_(base * 8, base * 8, 3, 1),
          r2b_(base * 8, base * 8, 3, 1),
          proj_(base * 8, out_channels, 1, 1) {}

    void init_random(Rng& rng) {
        for (auto* c : layers()) c->init_random(rng);
    }

    int out_channels() const { return out_channels_; }
    static constexpr int spatial_stride = 8;

    std::vector<Conv2d<S>*> layers() {
        return {&c1_, &c2_, &c3_, &c4_, &r1a_, &r1b_, &r2a_, &r2b_, &proj_};
    }
    std::vector<const Conv2d<S>*> layers() const {
        return {&c1_, &c2_, &c3_, &c4_, &r1a_, &r1b_, &r2a_, &r2b_, &proj_};
    }

    struct Workspace {
        std::array<typename Conv2d<S>::Workspace, 9> conv;
        std::array<Tensor, 9> pre;    // pre-activation outputs
        std::array<Tensor, 9> post;   // post-relu (+ residual) outputs
    };

    Tensor forward(const Tensor& image, Workspace* ws = nullptr) const {
        auto act = [&](const Tensor& t) {
            Tensor o = t;
            o.data = o.data.cwiseMax(S(0));
            return o;
        };
        auto run = [&](const Conv2d<S>& conv, const Tensor& x, int slot) {
            Tensor y = conv.forward(x, ws ? &ws->conv[static_cast<std::size_t>(slot)] : nullptr);
            if (ws) ws->pre[static_cast<std::size_t>(slot)] = y;
            return y;
        };
        auto note = [&](Tensor t, int slot) {
            if (ws) ws->post[static_cast<std::size_t>(slot)] = t;
            return t;
        };
        Tensor a = note(act(run(c1_, image, 0)), 0);
        a = note(act(run(c2_, a, 1)), 1);
        a = note(act(run(c3_, a, 2)), 2);
        a = note(act(run(c4_, a, 3)), 3);
        // residual block 1
        Tensor b = note(act(run(r1a_, a, 4)), 4);
        Tensor c = run(r1b_, b, 5);
        c.data += a.data;
        c = note(act(c), 5);
        // residual block 2
        Tensor d = note(act(run(r2a_, c, 6)), 6);
        Tensor e = run(r2b_, d, 7);
        e.data += c.data;
        e = note(act(e), 7);
        Tensor out = run(proj_, e, 8);
        if (ws) ws->post[8] = out;
        return out;
    }

    struct Gradients {
        std::array<typename Conv2d<S>::Gradients, 9> conv;
        void init_like(const BackboneNet& n) {
            auto ls = n.layers();
            for (std::size_t i = 0; i < 9; i++) conv[i].init_like(*ls[i]);
        }
    };

    /// Backward from the projection output gradient; parameter gradients are
    /// accumulated into g. Input gradient is not needed and not returned.
    void backward(const Workspace& ws, const Tensor& dout, Gradients& g) const {
        auto relu_back = [&](const Tensor& dpost, int slot) {
            // mask from the post-relu value: for the residual slots the relu
            // input is conv output + skip, which pre[] alone does not capture
            Tensor d = dpost;
            const auto& post = ws.post[static_cast<std::size_t>(slot)];
            d.data =
                (post.data.array() > S(0)).select(d.data, Mat::Zero(d.data.rows(), d.data.cols()));
            return d;
        };
        Tensor d = proj_.backward(ws.conv[8], dout, g.conv[8]);

        // residual block 2: post[7] = relu(r2b(post[6]) + post[5])
        d = relu_back(d, 7);
        Tensor d_res2_in = d;  // flows to post[5] via the residual add
        Tensor d6 = r2b_.backward(ws.conv[7], d, g.conv[7]);
        d6 = relu_back(d6, 6);
        Tensor d5 = r2a_.backward(ws.conv[6], d6, g.conv[6]);
        d5.data += d_res2_in.data;

        // residual block 1: post[5] = relu(r1b(post[4]) + post[3])
        d5 = relu_back(d5, 5);
        Tensor d_res1_in = d5;
        Tensor d4 = r1b_.backward(ws.conv[5], d5, g.conv[5]);
        d4 = relu_back(d4, 4);
        Tensor d3 = r1a_.backward(ws.conv[4], d4, g.conv[4]);
        d3.data += d_res1_in.data;

        d3 = relu_back(d3, 3);
        Tensor d2 = c4_.backward(ws.conv[3], d3, g.conv[3]);
        d2 = relu_back(d2, 2);
        Tensor d1 = c3_.backward(ws.conv[2], d2, g.conv[2]);
        d1 = relu_back(d1, 1);
        Tensor d0 = c2_.backward(ws.conv[1], d1, g.conv[1]);
        d0 = relu_back(d0, 0);
        c1_.backward(ws.conv[0], d0, g.conv[0]);
    }

    template <typename T>
    BackboneNet<T> cast() const {
        BackboneNet<T> out(out_channels_, base());
        auto src = layers();
        auto dst = out.layers();
        for (std::size_t i = 0; i < src.size(); i++) {
            dst[i]->weight() = src[i]->weight().template cast<T>();
            dst[i]->bias() = src[i]->bias().template cast<T>();
        }
        return out;
    }

    int base() const { return c1_.out_channels(); }

private:
    int out_channels_ = 0;
    Conv2d<S> c1_, c2_, c3_, c4_, r1a_, r1b_, r2a_, r2b_, proj_;
};

// Backbone weight file: magic "ACEN", u16 version, u32 out channels, u32 base
// width, per-layer f32 weights + biases, CRC32.
inline constexpr std::uint16_t kBackboneVersion = 1;

inline void save_backbone(const BackboneNet<float>& net, const std::string& path) {
    BinaryWriter w(path);
    w.put_magic("ACEN");
    w.put<std::uint16_t>(kBackboneVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(net.out_channels()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(net.base()));
    for (const auto* layer : net.layers()) {
        const auto& wm = layer->weight();
        for (Eigen::Index r = 0; r < wm.rows(); r++)
            for (Eigen::Index c = 0; c < wm.cols(); c++) w.put<float>(wm(r, c));
        for (Eigen::Index r = 0; r < layer->bias().rows(); r++) w.put<float>(layer->bias()[r]);
    }
    w.finish_with_crc();
}

inline BackboneNet<float> load_backbone(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic("ACEN", path);
    if (r.get<std::uint16_t>() != kBackboneVersion) throw BinaryReader::VersionMismatch(path);
    const int out_channels = static_cast<int>(r.get<std::uint32_t>());
    const int base = static_cast<int>(r.get<std::uint32_t>());
    BackboneNet<float> net(out_channels, base);
    for (auto* layer : net.layers()) {
        auto& wm = layer->weight();
        for (Eigen::Index row = 0; row < wm.rows(); row++)
            for (Eigen::Index col = 0; col < wm.cols(); col++) wm(row, col) = r.get<float>();
        for (Eigen::Index row = 0; row < layer->bias().rows(); row++)
            layer->bias()[row] = r.get<float>();
    }
    r.verify_crc(path);
    return net;
}

}  // namespace scr
