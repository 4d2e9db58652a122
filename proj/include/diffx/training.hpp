// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "diffx/backend.hpp"
#include "diffx/labeling.hpp"
#include "diffx/mlp.hpp"
#include "diffx/predictor.hpp"

namespace diffx {

/// Turns labeled prompt pairs into regression examples for one tier.
/// Edge: features of (prompt_prev, prompt_curr). Cloud: the current prompt
/// fused with the image of the previous prompt, regenerated on `backend`.
inline std::vector<TrainingExample> examples_from_labels(const std::vector<LabeledPair>& labels, Tier tier,
                                                         const FeatureEncoders& encoders,
                                                         GenerationBackend& backend, std::uint64_t seed,
                                                         int base_steps = 25) {
    std::vector<TrainingExample> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
        if (l.prompt_prev.empty() || l.prompt_curr.empty()) {
            raise(ErrorCode::ParseError, "label '" + l.id + "' carries no prompts");
        }
        if (tier == Tier::Edge) {
            out.push_back({encoders.edge(l.prompt_prev, l.prompt_curr), l.s_star});
        } else {
            const auto draft = backend.txt2img(l.prompt_prev, base_steps, seed);
            out.push_back({encoders.cloud(l.prompt_curr, draft), l.s_star});
        }
    }
    return out;
}

/// Mean absolute error of clipped predictions.
inline double clipped_mae(const MlpParams& params, std::span<const TrainingExample> data, const CandidateSet& grid) {
    double acc = 0.0;
    for (const auto& ex : data) acc += std::abs(clip_strength(mlp_forward(params, ex.features), grid).value - ex.label.value);
    return acc / static_cast<double>(data.size());
}

inline double clipped_mse(const MlpParams& params, std::span<const TrainingExample> data, const CandidateSet& grid) {
    double acc = 0.0;
    for (const auto& ex : data) {
        const double r = clip_strength(mlp_forward(params, ex.features), grid).value - ex.label.value;
        acc += r * r;
    }
    return acc / static_cast<double>(data.size());
}

inline double raw_mse(const MlpParams& params, std::span<const TrainingExample> data) {
    return mlp_loss(params, data, 0.0);
}

}  // namespace diffx
