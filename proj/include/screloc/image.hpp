#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "screloc/geometry.hpp"

namespace scr {

/// Grayscale image, row-major, intensities in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    static Image zeros(int w, int h) {
        Image im;
        im.width = w;
        im.height = h;
        im.data.assign(static_cast<std::size_t>(w) * h, 0.0f);
        return im;
    }

    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    float sample_bilinear(double x, double y) const {
        x = std::clamp(x, 0.0, width - 1.0);
        y = std::clamp(y, 0.0, height - 1.0);
        const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
        const int x1 = std::min(x0 + 1, width - 1), y1 = std::min(y0 + 1, height - 1);
        const double fx = x - x0, fy = y - y0;
        return static_cast<float>((1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x1, y0) +
                                  (1 - fx) * fy * at(x0, y1) + fx * fy * at(x1, y1));
    }
};

inline Image resize(const Image& src, int new_w, int new_h) {
    Image dst = Image::zeros(new_w, new_h);
    const double sx = static_cast<double>(src.width) / new_w;
    const double sy = static_cast<double>(src.height) / new_h;
    for (int y = 0; y < new_h; y++)
        for (int x = 0; x < new_w; x++)
            dst.at(x, y) = src.sample_bilinear((x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
    return dst;
}

/// Rotate by `rad` about the given center onto a canvas of the given size,
/// sampling the source bilinearly; out-of-source pixels become 0.
inline Image rotate_about(const Image& src, double rad, double cx_src, double cy_src, int canvas_w,
                          int canvas_h, double cx_dst, double cy_dst) {
    Image dst = Image::zeros(canvas_w, canvas_h);
    const double c = std::cos(rad), s = std::sin(rad);
    for (int y = 0; y < canvas_h; y++) {
        for (int x = 0; x < canvas_w; x++) {
            // inverse map: rotate destination offset by -rad
            const double dx = x - cx_dst, dy = y - cy_dst;
            const double sxp = c * dx + s * dy + cx_src;
            const double syp = -s * dx + c * dy + cy_src;
            if (sxp < -0.5 || syp < -0.5 || sxp > src.width - 0.5 || syp > src.height - 0.5)
                continue;
            dst.at(x, y) = src.sample_bilinear(sxp, syp);
        }
    }
    return dst;
}

inline Image jitter(const Image& src, float brightness_delta, float contrast_scale) {
    Image dst = src;
    for (auto& v : dst.data)
        v = std::clamp((v - 0.5f) * contrast_scale + 0.5f + brightness_delta, 0.0f, 1.0f);
    return dst;
}

// Binary PGM (P5), 8-bit.
inline void write_pgm(const Image& im, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P5\n" << im.width << " " << im.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(im.width));
    for (int y = 0; y < im.height; y++) {
        for (int x = 0; x < im.width; x++)
            row[static_cast<std::size_t>(x)] =
                static_cast<unsigned char>(std::clamp(im.at(x, y), 0.0f, 1.0f) * 255.0f + 0.5f);
        out.write(reinterpret_cast<const char*>(row.data()), im.width);
    }
}

inline Image read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw std::runtime_error(path + ": not a binary PGM");
    int w, h, maxval;
    in >> w >> h >> maxval;
    in.get();
    Image im = Image::zeros(w, h);
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw std::runtime_error(path + ": truncated PGM");
    for (std::size_t i = 0; i < raw.size(); i++) im.data[i] = raw[i] / 255.0f;
    return im;
}

}  // namespace scr
