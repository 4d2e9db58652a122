// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "diffx/core.hpp"
#include "diffx/embedding.hpp"
#include "diffx/mlp.hpp"

namespace diffx {

/// Edge regressor: [h_prev, h_curr, h_curr - h_prev] -> 256 -> 64 -> 1.
inline std::vector<int> edge_architecture(int text_dim = kEdgeTextDim) { return {3 * text_dim, 256, 64, 1}; }

/// Cloud regressor over the fused [text, image] feature: -> 512 -> 256 -> 64 -> 1.
inline std::vector<int> cloud_architecture(int text_dim = kCloudTextDim, int image_dim = kImageDim) {
    return {text_dim + image_dim, 512, 256, 64, 1};
}

/// [h_prev, h_curr, h_curr - h_prev], in that order.
inline std::vector<double> edge_features(const EmbeddingVector& h_prev, const EmbeddingVector& h_curr) {
    const std::size_t d = h_prev.dim();
    if (h_curr.dim() != d) {
        raise(ErrorCode::DimensionMismatch, "previous and current prompt embeddings differ in dimension");
    }
    std::vector<double> f(3 * d);
    for (std::size_t i = 0; i < d; ++i) {
        f[i] = h_prev.values[i];
        f[d + i] = h_curr.values[i];
        f[2 * d + i] = h_curr.values[i] - h_prev.values[i];
    }
    return f;
}

/// Concatenation [h_cloud, v_cloud].
inline std::vector<double> fuse_multimodal(const EmbeddingVector& h_cloud, const EmbeddingVector& v_cloud) {
    if (!all_finite(h_cloud.values) || !all_finite(v_cloud.values)) {
        raise(ErrorCode::NonFinite, "multimodal inputs must be finite");
    }
    std::vector<double> f;
    f.reserve(h_cloud.dim() + v_cloud.dim());
    f.insert(f.end(), h_cloud.values.begin(), h_cloud.values.end());
    f.insert(f.end(), v_cloud.values.begin(), v_cloud.values.end());
    return f;
}

inline Strength predict_edge_strength(const MlpParams& params, const EmbeddingVector& h_prev,
                                      const EmbeddingVector& h_curr, const CandidateSet& grid) {
    return clip_strength(mlp_forward(params, edge_features(h_prev, h_curr)), grid);
}

inline Strength predict_cloud_strength(const MlpParams& params, const EmbeddingVector& h_cloud,
                                       const EmbeddingVector& v_cloud, const CandidateSet& grid) {
    return clip_strength(mlp_forward(params, fuse_multimodal(h_cloud, v_cloud)), grid);
}

/// The three encoder roles feeding the predictors.
struct FeatureEncoders {
    EmbeddingProvider edge_text{ProviderConfig::hash(kEdgeTextDim, 1)};
    EmbeddingProvider cloud_text{ProviderConfig::hash(kCloudTextDim, 2)};
    EmbeddingProvider image{ProviderConfig::hash(kImageDim, 4)};

    std::vector<double> edge(std::string_view prompt_prev, std::string_view prompt_curr) const {
        return edge_features(edge_text.embed_text(prompt_prev), edge_text.embed_text(prompt_curr));
    }

    std::vector<double> cloud(std::string_view prompt, const GeneratedImage& draft) const {
        return fuse_multimodal(cloud_text.embed_text(prompt), image.embed_image(draft));
    }

    std::vector<int> edge_layers() const { return edge_architecture(edge_text.dim()); }
    std::vector<int> cloud_layers() const { return cloud_architecture(cloud_text.dim(), image.dim()); }
};

}  // namespace diffx
