// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <zlib.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "diffx/error.hpp"

/// Minimal lossless PNG container for 8-bit RGB rasters. The encoder can
/// append an ancillary padding chunk so mock previews hit a fixed byte size.
namespace diffx::png {

inline constexpr std::array<std::uint8_t, 8> kSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
inline constexpr std::size_t kChunkOverhead = 12;  // length + type + crc

struct Raster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

    friend bool operator==(const Raster&, const Raster&) = default;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
           std::uint32_t{p[3]};
}

inline void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
                      std::span<const std::uint8_t> data) {
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t type_at = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const uLong crc = crc32(0L, out.data() + type_at, static_cast<uInt>(4 + data.size()));
    put_u32(out, static_cast<std::uint32_t>(crc));
}

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a);
    const int pb = std::abs(p - b);
    const int pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace detail

/// Encodes with filter type 0 on every row. When `target_size` is larger than
/// the natural encoding, a "fiLl" padding chunk brings the file to exactly
/// that size (gaps smaller than one chunk header cannot be filled).
inline std::vector<std::uint8_t> encode(const Raster& raster, std::size_t target_size = 0) {
    if (raster.width <= 0 || raster.height <= 0 ||
        raster.rgb.size() != static_cast<std::size_t>(raster.width) * raster.height * 3) {
        raise(ErrorCode::InvalidArgument, "raster shape does not match its buffer");
    }
    const std::size_t stride = static_cast<std::size_t>(raster.width) * 3;
    std::vector<std::uint8_t> filtered;
    filtered.reserve((stride + 1) * raster.height);
    for (int y = 0; y < raster.height; ++y) {
        filtered.push_back(0);
        const auto* row = raster.rgb.data() + y * stride;
        filtered.insert(filtered.end(), row, row + stride);
    }
    uLongf compressed_size = compressBound(static_cast<uLong>(filtered.size()));
    std::vector<std::uint8_t> compressed(compressed_size);
    if (compress2(compressed.data(), &compressed_size, filtered.data(),
                  static_cast<uLong>(filtered.size()), 6) != Z_OK) {
        raise(ErrorCode::IoError, "zlib compression failed");
    }
    compressed.resize(compressed_size);

    std::vector<std::uint8_t> out(kSignature.begin(), kSignature.end());
    std::vector<std::uint8_t> ihdr;
    detail::put_u32(ihdr, static_cast<std::uint32_t>(raster.width));
    detail::put_u32(ihdr, static_cast<std::uint32_t>(raster.height));
    ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit, truecolor, deflate, adaptive, no interlace
    detail::put_chunk(out, "IHDR", ihdr);
    detail::put_chunk(out, "IDAT", compressed);

    const std::size_t natural = out.size() + kChunkOverhead;  // + IEND
    if (target_size >= natural + kChunkOverhead) {
        std::vector<std::uint8_t> fill(target_size - natural - kChunkOverhead, 0);
        detail::put_chunk(out, "fiLl", fill);
    }
    detail::put_chunk(out, "IEND", {});
    return out;
}

struct Header {
    int width = 0;
    int height = 0;
};

/// Validates signature and IHDR, returning the declared dimensions.
inline Header read_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kSignature.size() + kChunkOverhead + 13 ||
        !std::equal(kSignature.begin(), kSignature.end(), bytes.begin()) ||
        std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
        raise(ErrorCode::ProtocolError, "not a PNG stream");
    }
    return Header{static_cast<int>(detail::get_u32(bytes.data() + 16)),
                  static_cast<int>(detail::get_u32(bytes.data() + 20))};
}

/// Decodes 8-bit RGB, non-interlaced images (all five row filters).
inline Raster decode(std::span<const std::uint8_t> bytes) {
    const Header header = read_header(bytes);
    if (bytes[24] != 8 || bytes[25] != 2 || bytes[28] != 0) {
        raise(ErrorCode::ProtocolError, "only 8-bit non-interlaced RGB PNG is supported");
    }
    std::vector<std::uint8_t> idat;
    std::size_t pos = kSignature.size();
    while (pos + kChunkOverhead <= bytes.size()) {
        const std::uint32_t len = detail::get_u32(bytes.data() + pos);
        if (pos + kChunkOverhead + len > bytes.size()) {
            raise(ErrorCode::ProtocolError, "truncated PNG chunk");
        }
        const auto* type = bytes.data() + pos + 4;
        const auto* data = type + 4;
        if (std::memcmp(type, "IDAT", 4) == 0) idat.insert(idat.end(), data, data + len);
        if (std::memcmp(type, "IEND", 4) == 0) break;
        pos += kChunkOverhead + len;
    }
    const std::size_t stride = static_cast<std::size_t>(header.width) * 3;
    std::vector<std::uint8_t> filtered((stride + 1) * header.height);
    uLongf out_size = static_cast<uLongf>(filtered.size());
    if (uncompress(filtered.data(), &out_size, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
        out_size != filtered.size()) {
        raise(ErrorCode::ProtocolError, "corrupt PNG image data");
    }
    Raster raster{header.width, header.height, std::vector<std::uint8_t>(stride * header.height)};
    for (int y = 0; y < header.height; ++y) {
        const std::uint8_t filter = filtered[y * (stride + 1)];
        const auto* src = filtered.data() + y * (stride + 1) + 1;
        auto* dst = raster.rgb.data() + y * stride;
        const auto* up = y > 0 ? dst - stride : nullptr;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= 3 ? dst[i - 3] : 0;
            const int b = up ? up[i] : 0;
            const int c = (up && i >= 3) ? up[i - 3] : 0;
            int predictor = 0;
            switch (filter) {
            case 0: predictor = 0; break;
            case 1: predictor = a; break;
            case 2: predictor = b; break;
            case 3: predictor = (a + b) / 2; break;
            case 4: predictor = detail::paeth(a, b, c); break;
            default: raise(ErrorCode::ProtocolError, "unknown PNG row filter");
            }
            dst[i] = static_cast<std::uint8_t>(src[i] + predictor);
        }
    }
    return raster;
}

}  // namespace diffx::png
