// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "diffx/error.hpp"

namespace diffx {

/// Fixed-dimension real vector produced by a text or image encoder.
struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const noexcept { return values.size(); }
    std::span<const double> span() const noexcept { return values; }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        raise(ErrorCode::DimensionMismatch, "dot of vectors with different lengths");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

inline bool all_finite(std::span<const double> a) {
    for (double v : a) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

/// Returns a unit-norm copy. A zero vector cannot be normalized and is rejected.
inline std::vector<double> normalized(std::span<const double> a) {
    const double n = l2_norm(a);
    if (!(n > 0.0) || !std::isfinite(n)) {
        raise(ErrorCode::NonFinite, "cannot normalize a zero or non-finite vector");
    }
    std::vector<double> out(a.begin(), a.end());
    for (double& v : out) v /= n;
    return out;
}

}  // namespace diffx
