#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "screloc/backbone.hpp"
#include "screloc/common.hpp"
#include "screloc/curriculum.hpp"

namespace scr {

struct EmptyDataset : std::runtime_error {
    EmptyDataset() : std::runtime_error("dataset contains no frames") {}
};

/// One augmented pass over a source image: the supervision pose and the
/// (augmented) intrinsics shared by every entry sampled from that pass.
struct BufferVisit {
    Pose pose;
    Intrinsics intrinsics;
};

/// Decorrelated training buffer. Features are stored as binary16 words and
/// decoded to f32 at batch-assembly time.
struct TrainingBuffer {
    Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic> features;  // C_f x n, f16
    std::vector<PixelCoord> pixels;
    std::vector<std::uint32_t> pose_index;  // entry -> visit
    std::vector<BufferVisit> visits;
    std::uint64_t seed = 0;

    std::size_t size() const { return pixels.size(); }
    int channels() const { return static_cast<int>(features.rows()); }

    Eigen::VectorXf feature(std::size_t i) const {
        Eigen::VectorXf f(features.rows());
        for (Eigen::Index r = 0; r < features.rows(); r++)
            f[r] = f16_decode(features(r, static_cast<Eigen::Index>(i)));
        return f;
    }

    Supervision supervision(std::size_t i) const {
        const BufferVisit& v = visits[pose_index[i]];
        return Supervision{pixels[i], v.intrinsics, v.pose};
    }

    /// Mean of the mapping camera centers over the pose table.
    Vec3 mean_camera_center() const {
        Vec3 m = Vec3::Zero();
        for (const auto& v : visits) m += v.pose.center();
        return visits.empty() ? m : Vec3(m / static_cast<double>(visits.size()));
    }
};

/// Fill the buffer by cycling over the shuffled frame sequence; every visit
/// draws a fresh augmentation and contributes up to samples_per_image cells
/// (without replacement, occupied cells only).
inline TrainingBuffer fill_buffer(const std::vector<View>& dataset, const Backbone& backbone,
                                  std::size_t capacity, Rng& rng,
                                  const AugmentConfig& aug = AugmentConfig::head_training(),
                                  int samples_per_image = 1024, int subsampling = 8) {
    if (dataset.empty()) throw EmptyDataset{};
    if (capacity == 0) throw std::invalid_argument("fill_buffer: zero capacity");

    TrainingBuffer buf;
    buf.pixels.reserve(capacity);
    buf.pose_index.reserve(capacity);

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = order.size();  // force a shuffle on the first frame

    std::vector<Eigen::Index> cells;
    while (buf.size() < capacity) {
        if (cursor == order.size()) {
            std::shuffle(order.begin(), order.end(), rng);
            cursor = 0;
        }
        const View& src = dataset[order[cursor++]];
        const View v = augment_view(src, rng, aug);
        const FeatureMap fm = extract_features(v, backbone, subsampling, &rng);
        if (buf.features.rows() == 0)
            buf.features.resize(fm.channels(), static_cast<Eigen::Index>(capacity));
        if (fm.channels() != buf.channels())
            throw DimensionMismatch("fill_buffer: inconsistent channel counts");

        cells.clear();
        for (Eigen::Index c = 0; c < fm.data.cols(); c++)
            if (fm.data.col(c).squaredNorm() > 0) cells.push_back(c);
        if (cells.empty()) continue;
        std::shuffle(cells.begin(), cells.end(), rng);
        const std::size_t take = std::min({cells.size(), static_cast<std::size_t>(samples_per_image),
                                           capacity - buf.size()});

        const auto visit = static_cast<std::uint32_t>(buf.visits.size());
        buf.visits.push_back(BufferVisit{v.pose, v.intrinsics});
        for (std::size_t s = 0; s < take; s++) {
            const Eigen::Index cell = cells[s];
            const Eigen::Index e = static_cast<Eigen::Index>(buf.size());
            for (Eigen::Index r = 0; r < fm.data.rows(); r++)
                buf.features(r, e) = f16_encode(fm.data(r, cell));
            const int row = static_cast<int>(cell) / fm.cols;
            const int col = static_cast<int>(cell) % fm.cols;
            buf.pixels.push_back(fm.cell_pixel(row, col));
            buf.pose_index.push_back(visit);
        }
    }
    return buf;
}

// ---------------------------------------------------------------------------
// Buffer persistence: magic "ACEB", u16 version, u64 seed, u32 entry count,
// u32 channels, u32 visit count, pose table (R row-major f64[9], t f64[3],
// fx fy cx cy f64, width height u32), entries (u32 visit, u v f64, f16
// feature words), CRC32. Little-endian.
// ---------------------------------------------------------------------------

inline constexpr std::uint16_t kBufferVersion = 1;

inline void save_buffer(const TrainingBuffer& buf, const std::string& path) {
    BinaryWriter w(path);
    w.put_magic("ACEB");
    w.put<std::uint16_t>(kBufferVersion);
    w.put<std::uint64_t>(buf.seed);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(buf.size()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(buf.channels()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(buf.visits.size()));
    for (const auto& v : buf.visits) {
        for (int r = 0; r < 3; r++)
            for (int c = 0; c < 3; c++) w.put<double>(v.pose.R(r, c));
        for (int r = 0; r < 3; r++) w.put<double>(v.pose.t[r]);
        w.put<double>(v.intrinsics.fx);
        w.put<double>(v.intrinsics.fy);
        w.put<double>(v.intrinsics.cx);
        w.put<double>(v.intrinsics.cy);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(v.intrinsics.width));
        w.put<std::uint32_t>(static_cast<std::uint32_t>(v.intrinsics.height));
    }
    for (std::size_t i = 0; i < buf.size(); i++) {
        w.put<std::uint32_t>(buf.pose_index[i]);
        w.put<double>(buf.pixels[i].u);
        w.put<double>(buf.pixels[i].v);
        for (Eigen::Index r = 0; r < buf.features.rows(); r++)
            w.put<std::uint16_t>(buf.features(r, static_cast<Eigen::Index>(i)));
    }
    w.finish_with_crc();
}

inline TrainingBuffer load_buffer(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic("ACEB", path);
    if (r.get<std::uint16_t>() != kBufferVersion) throw BinaryReader::VersionMismatch(path);
    TrainingBuffer buf;
    buf.seed = r.get<std::uint64_t>();
    const auto count = r.get<std::uint32_t>();
    const auto channels = r.get<std::uint32_t>();
    const auto n_visits = r.get<std::uint32_t>();
    buf.visits.resize(n_visits);
    for (auto& v : buf.visits) {
        for (int row = 0; row < 3; row++)
            for (int col = 0; col < 3; col++) v.pose.R(row, col) = r.get<double>();
        for (int row = 0; row < 3; row++) v.pose.t[row] = r.get<double>();
        v.intrinsics.fx = r.get<double>();
        v.intrinsics.fy = r.get<double>();
        v.intrinsics.cx = r.get<double>();
        v.intrinsics.cy = r.get<double>();
        v.intrinsics.width = static_cast<int>(r.get<std::uint32_t>());
        v.intrinsics.height = static_cast<int>(r.get<std::uint32_t>());
    }
    buf.features.resize(channels, count);
    buf.pixels.resize(count);
    buf.pose_index.resize(count);
    for (std::uint32_t i = 0; i < count; i++) {
        buf.pose_index[i] = r.get<std::uint32_t>();
        if (buf.pose_index[i] >= n_visits) throw std::runtime_error(path + ": bad pose index");
        buf.pixels[i].u = r.get<double>();
        buf.pixels[i].v = r.get<double>();
        for (std::uint32_t ch = 0; ch < channels; ch++)
            buf.features(ch, i) = r.get<std::uint16_t>();
    }
    r.verify_crc(path);
    return buf;
}

}  // namespace scr
