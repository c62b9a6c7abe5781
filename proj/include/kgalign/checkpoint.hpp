#pragma once
// Parameter checkpoint: one binary archive mapping parameter names to
// shape-annotated little-endian float64 arrays.
//
// Layout:
//   magic   "KGALNCK1" (8 bytes)
//   count   u32
//   entry*  u16 name_len | name bytes | u32 ndim | u64 dim[ndim] | f64 data
// Data is written in row-major order. Vectors are stored as n x 1.

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>

#include "kgalign/common.hpp"

namespace kgalign {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

using CheckpointEntries = std::map<std::string, Mat>;

namespace detail {

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError("truncated checkpoint: " + path);
    return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const CheckpointEntries& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path);
    out.write("KGALNCK1", 8);
    detail::write_pod<uint32_t>(out, static_cast<uint32_t>(entries.size()));
    for (const auto& [name, m] : entries) {
        detail::write_pod<uint16_t>(out, static_cast<uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::write_pod<uint32_t>(out, 2);
        detail::write_pod<uint64_t>(out, static_cast<uint64_t>(m.rows()));
        detail::write_pod<uint64_t>(out, static_cast<uint64_t>(m.cols()));
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) detail::write_pod<double>(out, m(i, j));
    }
    if (!out) throw ParseError("write failed: " + path);
}

inline CheckpointEntries load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != "KGALNCK1")
        throw ParseError("not a checkpoint file: " + path);
    uint32_t count = detail::read_pod<uint32_t>(in, path);
    CheckpointEntries entries;
    for (uint32_t e = 0; e < count; ++e) {
        uint16_t name_len = detail::read_pod<uint16_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw ParseError("truncated checkpoint: " + path);
        uint32_t ndim = detail::read_pod<uint32_t>(in, path);
        if (ndim != 2) throw ParseError("unsupported array rank in checkpoint: " + path);
        uint64_t rows = detail::read_pod<uint64_t>(in, path);
        uint64_t cols = detail::read_pod<uint64_t>(in, path);
        Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = detail::read_pod<double>(in, path);
        entries.emplace(std::move(name), std::move(m));
    }
    return entries;
}

}  // namespace kgalign
