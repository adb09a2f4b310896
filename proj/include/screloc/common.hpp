#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace scr {

// ---------------------------------------------------------------------------
// IEEE 754 binary16, round-to-nearest-even. Used for map storage and the
// training buffer; all arithmetic stays in f32/f64.
// ---------------------------------------------------------------------------

inline std::uint16_t f16_encode(float value) {
    std::uint32_t bits;
    std::memcpy(&bits, &value, 4);
    const std::uint32_t sign = (bits >> 16) & 0x8000u;
    std::int32_t exp = static_cast<std::int32_t>((bits >> 23) & 0xFF) - 127 + 15;
    std::uint32_t mant = bits & 0x7FFFFFu;

    if (((bits >> 23) & 0xFF) == 0xFF) {
        // inf/nan
        if (mant != 0) return static_cast<std::uint16_t>(sign | 0x7E00u);
        return static_cast<std::uint16_t>(sign | 0x7BFFu);  // clamp inf to max finite
    }
    if (exp >= 31) return static_cast<std::uint16_t>(sign | 0x7BFFu);  // overflow clamps
    if (exp <= 0) {
        // subnormal or zero
        if (exp < -10) return static_cast<std::uint16_t>(sign);
        mant |= 0x800000u;
        const int shift = 14 - exp;
        std::uint32_t half = mant >> shift;
        const std::uint32_t rem = mant & ((1u << shift) - 1);
        const std::uint32_t halfway = 1u << (shift - 1);
        if (rem > halfway || (rem == halfway && (half & 1u))) half++;
        return static_cast<std::uint16_t>(sign | half);
    }
    std::uint32_t half = (static_cast<std::uint32_t>(exp) << 10) | (mant >> 13);
    const std::uint32_t rem = mant & 0x1FFFu;
    if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) half++;
    if ((half & 0x7FFFu) >= 0x7C00u) half = 0x7BFFu | (half & 0x8000u);  // rounded into inf
    return static_cast<std::uint16_t>(sign | half);
}

inline float f16_decode(std::uint16_t half) {
    const std::uint32_t sign = static_cast<std::uint32_t>(half & 0x8000u) << 16;
    const std::uint32_t exp = (half >> 10) & 0x1F;
    const std::uint32_t mant = half & 0x3FFu;
    std::uint32_t bits;
    if (exp == 0) {
        if (mant == 0) {
            bits = sign;
        } else {
            // subnormal: renormalize
            int e = -1;
            std::uint32_t m = mant;
            do {
                m <<= 1;
                e++;
            } while ((m & 0x400u) == 0);
            bits = sign | static_cast<std::uint32_t>(127 - 15 - e) << 23 | ((m & 0x3FFu) << 13);
        }
    } else if (exp == 31) {
        bits = sign | 0x7F800000u | (mant << 13);
    } else {
        bits = sign | ((exp - 15 + 127) << 23) | (mant << 13);
    }
    float out;
    std::memcpy(&out, &bits, 4);
    return out;
}

inline float f16_roundtrip(float value) { return f16_decode(f16_encode(value)); }

// ---------------------------------------------------------------------------
// CRC32 (IEEE, reflected) for the binary file formats.
// ---------------------------------------------------------------------------

namespace detail {
inline const std::array<std::uint32_t, 256>& crc32_table() {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; i++) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; k++) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    return table;
}
}  // namespace detail

inline std::uint32_t crc32_update(std::uint32_t crc, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    crc ^= 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; i++) crc = detail::crc32_table()[(crc ^ p[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

inline std::uint32_t crc32(const void* data, std::size_t len) { return crc32_update(0, data, len); }

// ---------------------------------------------------------------------------
// Little-endian binary stream helpers. All on-disk formats are little-endian
// regardless of host order; a byte-wise CRC runs over everything written.
// ---------------------------------------------------------------------------

class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    }

    template <typename T>
    void put(T v) {
        static_assert(std::is_arithmetic_v<T>);
        unsigned char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        if constexpr (sizeof(T) > 1) {
            if (!host_is_little_endian()) {
                for (std::size_t i = 0; i < sizeof(T) / 2; i++) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
            }
        }
        write_raw(buf, sizeof(T));
    }

    void put_bytes(const void* data, std::size_t len) { write_raw(data, len); }

    void put_magic(const char magic[4]) { write_raw(magic, 4); }

    void finish_with_crc() {
        const std::uint32_t c = crc_;
        put(c);
        out_.flush();
        if (!out_) throw std::runtime_error("write failure");
    }

    std::uint32_t crc() const { return crc_; }

    static bool host_is_little_endian() {
        const std::uint16_t one = 1;
        unsigned char b;
        std::memcpy(&b, &one, 1);
        return b == 1;
    }

private:
    void write_raw(const void* data, std::size_t len) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
        crc_ = crc32_update(crc_, data, len);
    }

    std::ofstream out_;
    std::uint32_t crc_ = 0;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw std::runtime_error("cannot open for reading: " + path);
    }

    template <typename T>
    T get() {
        static_assert(std::is_arithmetic_v<T>);
        unsigned char buf[sizeof(T)];
        read_raw(buf, sizeof(T));
        if constexpr (sizeof(T) > 1) {
            if (!BinaryWriter::host_is_little_endian()) {
                for (std::size_t i = 0; i < sizeof(T) / 2; i++) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
            }
        }
        T v;
        std::memcpy(&v, buf, sizeof(T));
        return v;
    }

    void get_bytes(void* data, std::size_t len) { read_raw(data, len); }

    void expect_magic(const char magic[4], const std::string& what) {
        char buf[4];
        read_raw(buf, 4);
        if (std::memcmp(buf, magic, 4) != 0) throw BadMagic(what);
    }

    // Reads the trailing CRC (not folded into the running CRC) and compares.
    void verify_crc(const std::string& what) {
        const std::uint32_t expected = crc_;
        unsigned char buf[4];
        in_.read(reinterpret_cast<char*>(buf), 4);
        if (!in_ || in_.gcount() != 4) throw ChecksumMismatch(what + ": truncated file");
        std::uint32_t stored = 0;
        for (int i = 3; i >= 0; i--) stored = (stored << 8) | buf[i];
        if (stored != expected) throw ChecksumMismatch(what + ": checksum mismatch");
    }

    struct BadMagic : std::runtime_error {
        explicit BadMagic(const std::string& what) : std::runtime_error(what + ": bad magic") {}
    };
    struct ChecksumMismatch : std::runtime_error {
        explicit ChecksumMismatch(const std::string& what) : std::runtime_error(what) {}
    };
    struct VersionMismatch : std::runtime_error {
        explicit VersionMismatch(const std::string& what) : std::runtime_error(what + ": unsupported version") {}
    };

private:
    void read_raw(void* data, std::size_t len) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
        if (!in_ || static_cast<std::size_t>(in_.gcount()) != len)
            throw ChecksumMismatch("truncated file");
        crc_ = crc32_update(crc_, data, len);
    }

    std::ifstream in_;
    std::uint32_t crc_ = 0;
};

// Deterministic RNG used throughout; seeded explicitly everywhere.
using Rng = std::mt19937_64;

}  // namespace scr
