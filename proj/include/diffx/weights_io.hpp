// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <vector>

#include "diffx/mlp.hpp"

/// Weight file layout (all integers little-endian):
///
///   "DFXW" | u32 format_version (=1) | u32 n_dims | u32 dims[n_dims] | u8 activation
///   payload: for each layer, weights row-major then biases, as f32 LE
///   u32 CRC-32 of the payload bytes
namespace diffx {

inline constexpr std::uint32_t kWeightFormatVersion = 1;
inline constexpr char kWeightMagic[4] = {'D', 'F', 'X', 'W'};

namespace detail {

inline void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::size_t pos() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) raise(ErrorCode::FormatVersionMismatch, "weight file is truncated");
    }
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> serialize_weights(const MlpParams& params) {
    params.validate();
    std::vector<std::uint8_t> out(std::begin(kWeightMagic), std::end(kWeightMagic));
    detail::put_le32(out, kWeightFormatVersion);
    detail::put_le32(out, static_cast<std::uint32_t>(params.layer_dims.size()));
    for (int d : params.layer_dims) detail::put_le32(out, static_cast<std::uint32_t>(d));
    out.push_back(static_cast<std::uint8_t>(params.activation));

    const std::size_t payload_start = out.size();
    for (std::size_t k = 0; k < params.num_layers(); ++k) {
        const auto& w = params.weights[k];
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                detail::put_le32(out, std::bit_cast<std::uint32_t>(static_cast<float>(w(r, c))));
            }
        }
        for (Eigen::Index r = 0; r < params.biases[k].size(); ++r) {
            detail::put_le32(out, std::bit_cast<std::uint32_t>(static_cast<float>(params.biases[k](r))));
        }
    }
    const uLong crc = crc32(0L, out.data() + payload_start, static_cast<uInt>(out.size() - payload_start));
    detail::put_le32(out, static_cast<std::uint32_t>(crc));
    return out;
}

/// `expected_dims`, when given, must match the stored architecture (ShapeMismatch otherwise).
inline MlpParams deserialize_weights(const std::vector<std::uint8_t>& bytes,
                                     const std::optional<std::vector<int>>& expected_dims = std::nullopt) {
    detail::ByteReader in(bytes);
    char magic[4];
    for (char& c : magic) c = static_cast<char>(in.u8());
    if (std::memcmp(magic, kWeightMagic, 4) != 0) raise(ErrorCode::FormatVersionMismatch, "not a weight file");
    const std::uint32_t version = in.u32();
    if (version != kWeightFormatVersion) {
        raise(ErrorCode::FormatVersionMismatch, "unsupported weight format version " + std::to_string(version));
    }
    const std::uint32_t n_dims = in.u32();
    if (n_dims < 2 || n_dims > 64) raise(ErrorCode::ShapeMismatch, "implausible layer count");
    MlpParams p;
    for (std::uint32_t i = 0; i < n_dims; ++i) {
        const std::uint32_t d = in.u32();
        if (d == 0 || d > (1u << 24)) raise(ErrorCode::ShapeMismatch, "implausible layer width");
        p.layer_dims.push_back(static_cast<int>(d));
    }
    if (p.layer_dims.back() != 1) raise(ErrorCode::ShapeMismatch, "output layer must have width 1");
    if (expected_dims && *expected_dims != p.layer_dims) {
        raise(ErrorCode::ShapeMismatch, "stored architecture differs from the expected one");
    }
    const std::uint8_t act = in.u8();
    if (act != static_cast<std::uint8_t>(Activation::ReLU)) {
        raise(ErrorCode::FormatVersionMismatch, "unknown activation code");
    }
    p.activation = Activation::ReLU;

    std::size_t expected_floats = 0;
    for (std::size_t i = 0; i + 1 < p.layer_dims.size(); ++i) {
        expected_floats += static_cast<std::size_t>(p.layer_dims[i + 1]) * (p.layer_dims[i] + 1);
    }
    if (in.remaining() < expected_floats * 4 + 4) {
        raise(ErrorCode::FormatVersionMismatch, "weight file is truncated");
    }
    if (in.remaining() > expected_floats * 4 + 4) {
        raise(ErrorCode::ShapeMismatch, "payload is larger than the declared architecture");
    }

    const std::size_t payload_start = in.pos();
    for (std::size_t k = 0; k + 1 < p.layer_dims.size(); ++k) {
        Eigen::MatrixXd w(p.layer_dims[k + 1], p.layer_dims[k]);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = in.f32();
        }
        Eigen::VectorXd b(p.layer_dims[k + 1]);
        for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = in.f32();
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
    }
    const uLong crc = crc32(0L, bytes.data() + payload_start, static_cast<uInt>(in.pos() - payload_start));
    if (in.u32() != static_cast<std::uint32_t>(crc)) {
        raise(ErrorCode::FormatVersionMismatch, "payload checksum mismatch");
    }
    p.validate();
    return p;
}

inline void save_weights(const MlpParams& params, const std::filesystem::path& path) {
    const auto bytes = serialize_weights(params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) raise(ErrorCode::IoError, "short write to " + path.string());
}

inline MlpParams load_weights(const std::filesystem::path& path,
                              const std::optional<std::vector<int>>& expected_dims = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot read " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_weights(bytes, expected_dims);
}

}  // namespace diffx
