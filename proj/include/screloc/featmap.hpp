#pragma once

#include <Eigen/Dense>
#include <string>

#include "screloc/common.hpp"
#include "screloc/geometry.hpp"

namespace scr {

/// Pixel position attached to a feature cell (cell-center convention).
inline PixelCoord pixel_of_cell(int row, int col, int subsampling) {
    return {(col + 0.5) * subsampling, (row + 0.5) * subsampling};
}

/// Dense feature grid at 1/subsampling resolution. Channels x (rows*cols),
/// cell (r,c) stored at column r*cols + c.
struct FeatureMap {
    int rows = 0;
    int cols = 0;
    int subsampling = 8;
    Intrinsics source_intrinsics;
    Eigen::MatrixXf data;  // channels x rows*cols

    static FeatureMap create(const Intrinsics& k, int channels, int subsampling) {
        FeatureMap m;
        m.subsampling = subsampling;
        m.source_intrinsics = k;
        m.rows = (k.height + subsampling - 1) / subsampling;
        m.cols = (k.width + subsampling - 1) / subsampling;
        m.data = Eigen::MatrixXf::Zero(channels, static_cast<Eigen::Index>(m.rows) * m.cols);
        return m;
    }

    int channels() const { return static_cast<int>(data.rows()); }
    Eigen::Index cell_index(int row, int col) const {
        return static_cast<Eigen::Index>(row) * cols + col;
    }
    PixelCoord cell_pixel(int row, int col) const { return pixel_of_cell(row, col, subsampling); }
};

inline constexpr std::uint16_t kFeatureMapVersion = 1;

inline void save_feature_map(const FeatureMap& m, const std::string& path) {
    BinaryWriter w(path);
    w.put_magic("ACEF");
    w.put<std::uint16_t>(kFeatureMapVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.rows));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.cols));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.channels()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.subsampling));
    w.put<float>(static_cast<float>(m.source_intrinsics.fx));
    w.put<float>(static_cast<float>(m.source_intrinsics.fy));
    w.put<float>(static_cast<float>(m.source_intrinsics.cx));
    w.put<float>(static_cast<float>(m.source_intrinsics.cy));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.source_intrinsics.width));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.source_intrinsics.height));
    // row-major over cells, channel-major within a cell
    for (Eigen::Index c = 0; c < m.data.cols(); c++)
        for (Eigen::Index r = 0; r < m.data.rows(); r++) w.put<float>(m.data(r, c));
    w.finish_with_crc();
}

inline FeatureMap load_feature_map(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic("ACEF", path);
    if (r.get<std::uint16_t>() != kFeatureMapVersion) throw BinaryReader::VersionMismatch(path);
    FeatureMap m;
    m.rows = static_cast<int>(r.get<std::uint32_t>());
    m.cols = static_cast<int>(r.get<std::uint32_t>());
    const int channels = static_cast<int>(r.get<std::uint32_t>());
    m.subsampling = static_cast<int>(r.get<std::uint32_t>());
    m.source_intrinsics.fx = r.get<float>();
    m.source_intrinsics.fy = r.get<float>();
    m.source_intrinsics.cx = r.get<float>();
    m.source_intrinsics.cy = r.get<float>();
    m.source_intrinsics.width = static_cast<int>(r.get<std::uint32_t>());
    m.source_intrinsics.height = static_cast<int>(r.get<std::uint32_t>());
    m.data = Eigen::MatrixXf(channels, static_cast<Eigen::Index>(m.rows) * m.cols);
    for (Eigen::Index c = 0; c < m.data.cols(); c++)
        for (Eigen::Index ch = 0; ch < channels; ch++) m.data(ch, c) = r.get<float>();
    r.verify_crc(path);
    return m;
}

}  // namespace scr
