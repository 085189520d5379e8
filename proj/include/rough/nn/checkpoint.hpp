#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "rough/nn/tensor.hpp"

namespace rough::nn {

// Checkpoint file: 8-byte magic "RSIGCKPT", u32 version, u32 param count,
// then per parameter: u32 name length, name bytes, u32 rows, u32 cols,
// rows*cols float32 values. All integers and floats little-endian.
inline constexpr char kCkptMagic[8] = {'R', 'S', 'I', 'G', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCkptVersion = 1;

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(os, bits);
}

inline float read_f32(std::istream& is) {
    const std::uint32_t bits = read_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace detail

template <class T>
void save_checkpoint(const std::string& path, const std::vector<Param<T>*>& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write(kCkptMagic, 8);
    detail::write_u32(os, kCkptVersion);
    detail::write_u32(os, static_cast<std::uint32_t>(params.size()));
    for (const auto* p : params) {
        detail::write_u32(os, static_cast<std::uint32_t>(p->name.size()));
        os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        detail::write_u32(os, static_cast<std::uint32_t>(p->w.rows));
        detail::write_u32(os, static_cast<std::uint32_t>(p->w.cols));
        for (const T v : p->w.data) detail::write_f32(os, static_cast<float>(v));
    }
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

// Loads into an already-constructed model's parameter list; names and shapes
// must match exactly.
template <class T>
void load_checkpoint(const std::string& path, const std::vector<Param<T>*>& params) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kCkptMagic, 8) != 0) fail("not a checkpoint file: " + path);
    const std::uint32_t version = detail::read_u32(is);
    if (version != kCkptVersion) fail("unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t count = detail::read_u32(is);
    if (count != params.size())
        fail("checkpoint holds " + std::to_string(count) + " parameters, model expects " +
             std::to_string(params.size()));
    for (auto* p : params) {
        const std::uint32_t name_len = detail::read_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const std::uint32_t rows = detail::read_u32(is);
        const std::uint32_t cols = detail::read_u32(is);
        if (!is) fail("truncated checkpoint: " + path);
        if (name != p->name) fail("checkpoint parameter '" + name + "' does not match model '" + p->name + "'");
        if (rows != static_cast<std::uint32_t>(p->w.rows) || cols != static_cast<std::uint32_t>(p->w.cols))
            fail("shape mismatch for parameter '" + name + "'");
        for (auto& v : p->w.data) v = static_cast<T>(detail::read_f32(is));
    }
    if (!is) fail("truncated checkpoint: " + path);
}

}  // namespace rough::nn
