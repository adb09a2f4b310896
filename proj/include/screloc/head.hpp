#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "screloc/common.hpp"
#include "screloc/geometry.hpp"
#include "screloc/nn.hpp"

namespace scr {

// ---------------------------------------------------------------------------
// Biased, clipped softplus mapping the raw homogeneous parameter w_hat to a
// bounded positive divisor w in (1/s_max, 1/s_min]. w_hat = 0 maps to w = 1.
// ---------------------------------------------------------------------------

struct WClipConfig {
    double s_min = 0.01;
    double s_max = 4.0;

    double beta() const { return std::log(2.0) / (1.0 - 1.0 / s_max); }
};

namespace detail {
inline double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}
}  // namespace detail

inline double wclip(double w_hat, const WClipConfig& cfg = {}) {
    const double beta = cfg.beta();
    const double unclipped = detail::softplus(beta * w_hat) / beta + 1.0 / cfg.s_max;
    return std::min(1.0 / cfg.s_min, unclipped);
}

/// d wclip / d w_hat; zero in the clipped regime.
inline double wclip_grad(double w_hat, const WClipConfig& cfg = {}) {
    const double beta = cfg.beta();
    const double unclipped = detail::softplus(beta * w_hat) / beta + 1.0 / cfg.s_max;
    if (unclipped >= 1.0 / cfg.s_min) return 0.0;
    return 1.0 / (1.0 + std::exp(-beta * w_hat));
}

/// Homogeneous 4-vector -> 3D point (no mean restore).
inline Vec3 dehomogenize(const Eigen::Vector4d& raw, const WClipConfig& cfg = {}) {
    const double w = wclip(raw[3], cfg);
    return raw.head<3>() / w;
}

/// Backward of dehomogenize: given dL/dy returns dL/draw.
inline Eigen::Vector4d dehomogenize_backward(const Eigen::Vector4d& raw, const Vec3& dy,
                                             const WClipConfig& cfg = {}) {
    const double w = wclip(raw[3], cfg);
    Eigen::Vector4d g;
    g.head<3>() = dy / w;
    g[3] = -dy.dot(raw.head<3>()) / (w * w) * wclip_grad(raw[3], cfg);
    return g;
}

// ---------------------------------------------------------------------------
// Scene-specific coordinate-regression head. The serialized form of this
// struct is "the map".
// ---------------------------------------------------------------------------

struct HeadConfig {
    int input_dim = 128;
    int width = 256;       // paper-scale 512
    int n_hidden = 8;
    bool homogeneous = true;
    WClipConfig wclip;
};

struct RegressionHead {
    Mlp<float> net;
    bool homogeneous = true;
    Vec3 mean_translation = Vec3::Zero();
    WClipConfig wclip;

    static RegressionHead create(const HeadConfig& cfg, Rng& rng) {
        RegressionHead h;
        h.net = Mlp<float>(cfg.input_dim, cfg.width, cfg.n_hidden, cfg.homogeneous ? 4 : 3);
        h.net.init_random(rng);
        h.homogeneous = cfg.homogeneous;
        h.wclip = cfg.wclip;
        return h;
    }

    int input_dim() const { return net.in_dim(); }

    /// Features (C_f x B) -> scene coordinates (3 x B), mean restored.
    Eigen::MatrixXd predict(const Eigen::MatrixXf& features) const {
        const Eigen::MatrixXf raw = net.forward(features);
        Eigen::MatrixXd out(3, raw.cols());
        for (Eigen::Index c = 0; c < raw.cols(); c++) {
            Vec3 y;
            if (homogeneous) {
                Eigen::Vector4d r = raw.col(c).cast<double>();
                y = dehomogenize(r, wclip);
            } else {
                y = raw.col(c).head<3>().cast<double>();
            }
            out.col(c) = y + mean_translation;
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Map file: magic "ACEM", u16 version, u8 homogeneous flag, u32 input dim,
// u32 width, u32 hidden-layer count, f32 mean_translation[3], per-layer f16
// row-major weights + f16 biases, CRC32. Little-endian.
// ---------------------------------------------------------------------------

inline constexpr std::uint16_t kMapVersion = 1;

inline void save_map(const RegressionHead& head, const std::string& path) {
    BinaryWriter w(path);
    w.put_magic("ACEM");
    w.put<std::uint16_t>(kMapVersion);
    w.put<std::uint8_t>(head.homogeneous ? 1 : 0);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(head.net.in_dim()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(head.net.width()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(head.net.n_hidden()));
    for (int i = 0; i < 3; i++) w.put<float>(static_cast<float>(head.mean_translation[i]));
    for (std::size_t l = 0; l < head.net.weights().size(); l++) {
        const auto& wm = head.net.weights()[l];
        for (Eigen::Index r = 0; r < wm.rows(); r++)
            for (Eigen::Index c = 0; c < wm.cols(); c++) w.put<std::uint16_t>(f16_encode(wm(r, c)));
        const auto& bv = head.net.biases()[l];
        for (Eigen::Index r = 0; r < bv.rows(); r++) w.put<std::uint16_t>(f16_encode(bv[r]));
    }
    w.finish_with_crc();
}

inline RegressionHead load_map(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic("ACEM", path);
    const auto version = r.get<std::uint16_t>();
    if (version != kMapVersion) throw BinaryReader::VersionMismatch(path);
    const bool homogeneous = r.get<std::uint8_t>() != 0;
    const auto in_dim = static_cast<int>(r.get<std::uint32_t>());
    const auto width = static_cast<int>(r.get<std::uint32_t>());
    const auto n_hidden = static_cast<int>(r.get<std::uint32_t>());
    RegressionHead head;
    head.homogeneous = homogeneous;
    head.net = Mlp<float>(in_dim, width, n_hidden, homogeneous ? 4 : 3);
    for (int i = 0; i < 3; i++) head.mean_translation[i] = r.get<float>();
    for (std::size_t l = 0; l < head.net.weights().size(); l++) {
        auto& wm = head.net.weights()[l];
        for (Eigen::Index row = 0; row < wm.rows(); row++)
            for (Eigen::Index col = 0; col < wm.cols(); col++)
                wm(row, col) = f16_decode(r.get<std::uint16_t>());
        auto& bv = head.net.biases()[l];
        for (Eigen::Index row = 0; row < bv.rows(); row++) bv[row] = f16_decode(r.get<std::uint16_t>());
    }
    r.verify_crc(path);
    return head;
}

}  // namespace scr
