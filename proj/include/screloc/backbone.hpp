#pragma once

#include <Eigen/Dense>
#include <memory>
#include <variant>

#include "screloc/convnet.hpp"
#include "screloc/featmap.hpp"
#include "screloc/image.hpp"
#include "screloc/synth.hpp"

namespace scr {

/// One posed input frame. Payload is an image, an oracle world binding, or a
/// precomputed feature map. `pose` is the supervision (mapping) pose;
/// `render_pose` is what the oracle renders from (differs when mapping poses
/// are deliberately noisy).
struct View {
    std::string id;
    Pose pose;
    Pose render_pose;
    Intrinsics intrinsics;
    std::shared_ptr<const Image> image;
    std::shared_ptr<const SyntheticWorld> world;
    std::shared_ptr<const FeatureMap> features;

    static View of_frame(std::string id, const Pose& pose, const Intrinsics& k) {
        View v;
        v.id = std::move(id);
        v.pose = pose;
        v.render_pose = pose;
        v.intrinsics = k;
        return v;
    }
};

// ---------------------------------------------------------------------------
// Augmentation. Geometric changes keep (intrinsics, pose) consistent with the
// pixel content: scaling multiplies the intrinsics, in-plane rotation about
// the principal point becomes a camera-roll adjustment on a padded canvas.
// ---------------------------------------------------------------------------

struct AugmentConfig {
    double height_min = 0;  // target image height range (px); 0 disables
    double height_max = 0;
    double max_rotation_deg = 0;
    double brightness_jitter = 0;
    double contrast_jitter = 0;

    static AugmentConfig none() { return {}; }

    /// Head-training augmentation: 10% jitter, 320-720 px height
    /// (inverse-scale sampling), rotations up to 15 degrees.
    static AugmentConfig head_training() {
        AugmentConfig c;
        c.height_min = 320;
        c.height_max = 720;
        c.max_rotation_deg = 15;
        c.brightness_jitter = 0.1;
        c.contrast_jitter = 0.1;
        return c;
    }

    /// Backbone-training augmentation: stronger scales and rotations.
    static AugmentConfig backbone_training() {
        AugmentConfig c;
        c.height_min = 240;
        c.height_max = 960;
        c.max_rotation_deg = 40;
        c.brightness_jitter = 0.4;
        c.contrast_jitter = 0.3;
        return c;
    }
};

inline View augment_view(const View& view, Rng& rng, const AugmentConfig& cfg) {
    View out = view;
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    double scale = 1.0;
    if (cfg.height_min > 0 && cfg.height_max > 0) {
        // sample the inverse scale uniformly
        const double s_lo = cfg.height_min / view.intrinsics.height;
        const double s_hi = cfg.height_max / view.intrinsics.height;
        const double inv = 1.0 / s_hi + uni(rng) * (1.0 / s_lo - 1.0 / s_hi);
        scale = 1.0 / inv;
    }
    double rot_deg = 0.0;
    if (cfg.max_rotation_deg > 0) rot_deg = (2.0 * uni(rng) - 1.0) * cfg.max_rotation_deg;

    // precomputed features describe the original geometry only
    if ((scale != 1.0 || rot_deg != 0.0) && out.features) out.features.reset();

    if (scale != 1.0) {
        const int new_w = std::max(1, static_cast<int>(std::lround(view.intrinsics.width * scale)));
        const int new_h = std::max(1, static_cast<int>(std::lround(view.intrinsics.height * scale)));
        const double ax = static_cast<double>(new_w) / view.intrinsics.width;
        const double ay = static_cast<double>(new_h) / view.intrinsics.height;
        out.intrinsics.fx *= ax;
        out.intrinsics.cx *= ax;
        out.intrinsics.fy *= ay;
        out.intrinsics.cy *= ay;
        out.intrinsics.width = new_w;
        out.intrinsics.height = new_h;
        if (out.image) {
            // direct scaling convention: dst pixel p samples src p/alpha
            Image resized = Image::zeros(new_w, new_h);
            for (int y = 0; y < new_h; y++)
                for (int x = 0; x < new_w; x++)
                    resized.at(x, y) = out.image->sample_bilinear(x / ax, y / ay);
            out.image = std::make_shared<Image>(std::move(resized));
        }
    }

    if (rot_deg != 0.0) {
        const double rad = rot_deg * M_PI / 180.0;
        // pixel p maps to Rot(theta)*(p - c) + c'; camera-side this is a roll
        const Mat3 roll = rotation_z(rad);
        out.pose.R = out.pose.R * roll.transpose();
        out.render_pose.R = out.render_pose.R * roll.transpose();
        if (out.image) {
            const double w = out.intrinsics.width, h = out.intrinsics.height;
            const double c = std::abs(std::cos(rad)), s = std::abs(std::sin(rad));
            const int canvas_w = static_cast<int>(std::ceil(w * c + h * s));
            const int canvas_h = static_cast<int>(std::ceil(w * s + h * c));
            const double cx_new = out.intrinsics.cx + (canvas_w - w) / 2.0;
            const double cy_new = out.intrinsics.cy + (canvas_h - h) / 2.0;
            Image rotated = rotate_about(*out.image, rad, out.intrinsics.cx, out.intrinsics.cy,
                                         canvas_w, canvas_h, cx_new, cy_new);
            out.image = std::make_shared<Image>(std::move(rotated));
            out.intrinsics.cx = cx_new;
            out.intrinsics.cy = cy_new;
            out.intrinsics.width = canvas_w;
            out.intrinsics.height = canvas_h;
        }
    }

    if (out.image && (cfg.brightness_jitter > 0 || cfg.contrast_jitter > 0)) {
        const float db = static_cast<float>((2.0 * uni(rng) - 1.0) * cfg.brightness_jitter);
        const float dc = static_cast<float>(1.0 + (2.0 * uni(rng) - 1.0) * cfg.contrast_jitter);
        out.image = std::make_shared<Image>(jitter(*out.image, db, dc));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Handcrafted dense descriptor: per 8x8 cell, gradient-orientation histograms
// over a 32x32 neighborhood (8 bins x 4 spatial sub-blocks x 2 scales =
// 64 dims), L2-normalized, optionally lifted to out_channels by a fixed
// seeded orthonormal projection.
// ---------------------------------------------------------------------------

struct HandcraftedConfig {
    int out_channels = 64;  // 64 = native descriptor; larger uses a projection
    std::uint64_t projection_seed = 424242;
};

namespace detail {

inline Image halve(const Image& src) {
    Image dst = Image::zeros(std::max(1, src.width / 2), std::max(1, src.height / 2));
    for (int y = 0; y < dst.height; y++)
        for (int x = 0; x < dst.width; x++) {
            const int sx = 2 * x, sy = 2 * y;
            float sum = src.at(sx, sy);
            int n = 1;
            if (sx + 1 < src.width) {
                sum += src.at(sx + 1, sy);
                n++;
            }
            if (sy + 1 < src.height) {
                sum += src.at(sx, sy + 1);
                n++;
            }
            if (sx + 1 < src.width && sy + 1 < src.height) {
                sum += src.at(sx + 1, sy + 1);
                n++;
            }
            dst.at(x, y) = sum / static_cast<float>(n);
        }
    return dst;
}

inline void accumulate_histogram(const Image& im, double ucenter, double vcenter, int half_window,
                                 float* out /* 32 floats: 4 blocks x 8 bins */) {
    for (int dy = -half_window; dy < half_window; dy++) {
        for (int dx = -half_window; dx < half_window; dx++) {
            const int x = static_cast<int>(ucenter) + dx;
            const int y = static_cast<int>(vcenter) + dy;
            if (x < 1 || y < 1 || x >= im.width - 1 || y >= im.height - 1) continue;
            const double gx = im.at(x + 1, y) - im.at(x - 1, y);
            const double gy = im.at(x, y + 1) - im.at(x, y - 1);
            const double mag = std::hypot(gx, gy);
            if (mag < 1e-9) continue;
            int bin = static_cast<int>(std::floor((std::atan2(gy, gx) + M_PI) / (2 * M_PI) * 8));
            bin = std::clamp(bin, 0, 7);
            const int block = (dy < 0 ? 0 : 2) + (dx < 0 ? 0 : 1);
            out[block * 8 + bin] += static_cast<float>(mag);
        }
    }
}

inline Eigen::MatrixXf orthonormal_projection(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXf m(std::max(rows, cols), std::min(rows, cols));
    for (Eigen::Index i = 0; i < m.size(); i++) m.data()[i] = static_cast<float>(gauss(rng));
    Eigen::HouseholderQR<Eigen::MatrixXf> qr(m);
    Eigen::MatrixXf q = qr.householderQ() * Eigen::MatrixXf::Identity(m.rows(), m.cols());
    if (rows >= cols) return q.topRows(rows);       // rows x cols, orthonormal columns
    return q.topRows(cols).transpose().topRows(rows);
}

}  // namespace detail

inline FeatureMap extract_handcrafted(const Image& image, const Intrinsics& k,
                                      const HandcraftedConfig& cfg, int subsampling = 8) {
    FeatureMap map = FeatureMap::create(k, cfg.out_channels, subsampling);
    const Image half = detail::halve(image);
    Eigen::MatrixXf projection;
    if (cfg.out_channels != 64)
        projection = detail::orthonormal_projection(cfg.out_channels, 64, cfg.projection_seed);
    Eigen::VectorXf desc(64);
    for (int r = 0; r < map.rows; r++) {
        for (int c = 0; c < map.cols; c++) {
            const PixelCoord center = map.cell_pixel(r, c);
            desc.setZero();
            detail::accumulate_histogram(image, center.u, center.v, 16, desc.data());
            detail::accumulate_histogram(half, center.u / 2, center.v / 2, 8, desc.data() + 32);
            const float n = desc.norm();
            if (n > 1e-8f) desc /= n;
            if (cfg.out_channels == 64)
                map.data.col(map.cell_index(r, c)) = desc;
            else
                map.data.col(map.cell_index(r, c)).noalias() = projection * desc;
        }
    }
    return map;
}

// ---------------------------------------------------------------------------
// Backbone dispatch
// ---------------------------------------------------------------------------

struct OracleBackbone {
    OracleNoise noise;
};

using Backbone = std::variant<OracleBackbone, HandcraftedConfig, BackboneNet<float>>;

struct UnsupportedSize : std::runtime_error {
    UnsupportedSize() : std::runtime_error("image smaller than the feature stride") {}
};

inline FeatureMap extract_features(const View& view, const Backbone& backbone, int subsampling = 8,
                                   Rng* rng = nullptr) {
    if (view.intrinsics.width < subsampling || view.intrinsics.height < subsampling)
        throw UnsupportedSize{};
    if (view.features) return *view.features;
    return std::visit(
        [&](const auto& b) -> FeatureMap {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, OracleBackbone>) {
                if (!view.world) throw std::runtime_error("oracle backbone needs a bound world");
                return render_observations(*view.world, view.render_pose, view.intrinsics,
                                           subsampling, b.noise, rng)
                    .features;
            } else if constexpr (std::is_same_v<T, HandcraftedConfig>) {
                if (!view.image) throw std::runtime_error("handcrafted backbone needs an image");
                return extract_handcrafted(*view.image, view.intrinsics, b, subsampling);
            } else {
                if (!view.image) throw std::runtime_error("learned backbone needs an image");
                ConvTensor<float> in;
                in.h = view.image->height;
                in.w = view.image->width;
                in.data = Eigen::Map<const Eigen::Matrix<float, 1, Eigen::Dynamic>>(
                    view.image->data.data(), static_cast<Eigen::Index>(view.image->data.size()));
                ConvTensor<float> feat = b.forward(in);
                FeatureMap map = FeatureMap::create(view.intrinsics, b.out_channels(), subsampling);
                // conv output is already on the 1/8 grid with matching ceil dims
                if (feat.h != map.rows || feat.w != map.cols)
                    throw std::runtime_error("backbone output grid mismatch");
                map.data = feat.data;
                return map;
            }
        },
        backbone);
}

inline int backbone_channels(const Backbone& b) {
    return std::visit(
        [](const auto& v) -> int {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, OracleBackbone>) return -1;  // set by the world
            else if constexpr (std::is_same_v<T, HandcraftedConfig>) return v.out_channels;
            else return v.out_channels();
        },
        b);
}

}  // namespace scr
