// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diffx/codec.hpp"
#include "diffx/hashing.hpp"
#include "diffx/png.hpp"
#include "diffx/vector.hpp"

namespace diffx {

enum class Provenance { MockEdge, MockCloud, Remote };

inline std::string_view to_string(Provenance p) {
    switch (p) {
    case Provenance::MockEdge: return "mock-edge";
    case Provenance::MockCloud: return "mock-cloud";
    case Provenance::Remote: return "remote";
    }
    return "?";
}

inline Provenance provenance_from_string(std::string_view s) {
    for (Provenance p : {Provenance::MockEdge, Provenance::MockCloud, Provenance::Remote}) {
        if (to_string(p) == s) return p;
    }
    raise(ErrorCode::ParseError, "unknown provenance '" + std::string(s) + "'");
}

/// Deterministic banded pattern keyed by a seeded hash of the semantic vector.
inline png::Raster render_bands(const EmbeddingVector& semantic, std::uint64_t seed, int width, int height) {
    const auto* raw = reinterpret_cast<const std::uint8_t*>(semantic.values.data());
    const std::uint64_t key =
        seeded_hash(std::span<const std::uint8_t>(raw, semantic.values.size() * sizeof(double)), seed);

    std::array<std::array<std::uint8_t, 3>, 6> palette{};
    std::uint64_t state = key;
    for (auto& color : palette) {
        state = mix64(state);
        color = {static_cast<std::uint8_t>(state), static_cast<std::uint8_t>(state >> 8),
                 static_cast<std::uint8_t>(state >> 16)};
    }
    state = mix64(state);
    const int band = 8 + static_cast<int>(state % 57);
    const int slope = static_cast<int>((state >> 8) % 4);
    const int tile = 64 << ((state >> 16) % 3);

    png::Raster raster{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * 3)};
    auto* px = raster.rgb.data();
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int tile_shift = ((x / tile) + (y / tile)) & 1;
            const auto& c = palette[static_cast<std::size_t>(((x + slope * y) / band + tile_shift * 3) % 6)];
            *px++ = c[0];
            *px++ = c[1];
            *px++ = c[2];
        }
    }
    return raster;
}

/// Output of a generation backend. Immutable; the encoded container is
/// produced lazily and shared between copies.
class GeneratedImage {
public:
    static constexpr int kDefaultSide = 512;

    static GeneratedImage mock(EmbeddingVector semantic_vec, std::optional<double> strength_used,
                               Provenance provenance, std::uint64_t seed, int width = kDefaultSide,
                               int height = kDefaultSide, std::size_t target_payload = 0) {
        GeneratedImage img;
        img.width_ = width;
        img.height_ = height;
        img.semantic_vec_ = std::move(semantic_vec);
        img.strength_used_ = strength_used;
        img.provenance_ = provenance;
        img.seed_ = seed;
        img.target_payload_ = target_payload;
        return img;
    }

    /// Wraps an already-encoded container (remote responses, images loaded from disk).
    static GeneratedImage from_container(std::vector<std::uint8_t> bytes, Provenance provenance,
                                         std::uint64_t seed, std::optional<double> strength_used = {},
                                         std::optional<EmbeddingVector> semantic_vec = {}) {
        const auto header = png::read_header(bytes);
        GeneratedImage img;
        img.width_ = header.width;
        img.height_ = header.height;
        img.semantic_vec_ = std::move(semantic_vec);
        img.strength_used_ = strength_used;
        img.provenance_ = provenance;
        img.seed_ = seed;
        img.target_payload_ = bytes.size();
        std::call_once(img.lazy_->once, [&] { img.lazy_->bytes = std::move(bytes); });
        return img;
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    const std::optional<EmbeddingVector>& semantic_vec() const noexcept { return semantic_vec_; }
    std::optional<double> strength_used() const noexcept { return strength_used_; }
    Provenance provenance() const noexcept { return provenance_; }
    std::uint64_t seed() const noexcept { return seed_; }

    const std::vector<std::uint8_t>& encoded() const {
        std::call_once(lazy_->once, [this] {
            lazy_->bytes = png::encode(render_bands(*semantic_vec_, seed_, width_, height_), target_payload_);
        });
        return lazy_->bytes;
    }

    /// Exact length of the encoded container.
    std::size_t payload_bytes() const { return encoded().size(); }

    /// Content address (SHA-256 hex of the container).
    std::string digest() const {
        std::call_once(lazy_->digest_once, [this] { lazy_->digest = sha256_hex(encoded()); });
        return lazy_->digest;
    }

    png::Raster pixels() const {
        if (semantic_vec_ && provenance_ != Provenance::Remote) {
            return render_bands(*semantic_vec_, seed_, width_, height_);
        }
        return png::decode(encoded());
    }

private:
    struct Lazy {
        std::once_flag once;
        std::vector<std::uint8_t> bytes;
        std::once_flag digest_once;
        std::string digest;
    };

    GeneratedImage() = default;

    int width_ = 0;
    int height_ = 0;
    std::optional<EmbeddingVector> semantic_vec_;
    std::optional<double> strength_used_;
    Provenance provenance_ = Provenance::MockEdge;
    std::uint64_t seed_ = 0;
    std::size_t target_payload_ = 0;
    std::shared_ptr<Lazy> lazy_ = std::make_shared<Lazy>();
};

}  // namespace diffx
