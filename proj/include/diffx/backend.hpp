// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "diffx/core.hpp"
#include "diffx/embedding.hpp"
#include "diffx/image.hpp"
#include "diffx/scheduler.hpp"

namespace diffx {

/// txt2img / img2img generation. Implementations must be deterministic in
/// their declared inputs and safe for concurrent calls.
class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;

    virtual GeneratedImage txt2img(std::string_view prompt, int steps, std::uint64_t seed) = 0;
    virtual GeneratedImage img2img(const GeneratedImage& image, std::string_view prompt,
                                   const DenoisePlan& plan, std::uint64_t seed) = 0;
    virtual std::string name() const = 0;
};

inline constexpr std::size_t kMockPreviewPayloadBytes = 500'000;

struct MockBackendConfig {
    // image-space semantic encoder used to place prompts in the latent space
    ProviderConfig embedder = ProviderConfig::hash(kImageDim, 3);
    Provenance provenance = Provenance::MockEdge;
    int width = GeneratedImage::kDefaultSide;
    int height = GeneratedImage::kDefaultSide;
    std::size_t target_payload_bytes = kMockPreviewPayloadBytes;
};

/// Procedural backend. Images carry a latent semantic vector; img2img blends
/// it toward the new prompt with weight equal to the strength.
class MockBackend final : public GenerationBackend {
public:
    explicit MockBackend(MockBackendConfig config = {})
        : config_(std::move(config)), embedder_(config_.embedder) {}

    GeneratedImage txt2img(std::string_view prompt, int steps, std::uint64_t seed) override {
        if (steps < 1) raise(ErrorCode::InvalidArgument, "steps must be >= 1");
        ++txt2img_calls_;
        // txt2img starts from pure noise, recorded as strength 1
        return make(embedder_.embed_text(prompt), 1.0, seed);
    }

    GeneratedImage img2img(const GeneratedImage& image, std::string_view prompt, const DenoisePlan& plan,
                           std::uint64_t seed) override {
        if (plan.steps < 1 || static_cast<int>(plan.timesteps.size()) != plan.steps) {
            raise(ErrorCode::InvalidArgument, "invalid denoise plan");
        }
        if (!image.semantic_vec()) {
            raise(ErrorCode::MissingSemanticVector, "mock img2img requires a mock-lineage image");
        }
        ++img2img_calls_;
        const auto& in = image.semantic_vec()->values;
        const auto target = embedder_.embed_text(prompt);
        if (in.size() != target.values.size()) {
            raise(ErrorCode::DimensionMismatch, "image semantic vector does not match backend dimension");
        }
        return make(EmbeddingVector{blend(in, target.values, plan.strength.value)}, plan.strength.value, seed);
    }

    std::string name() const override { return std::string(to_string(config_.provenance)); }

    const EmbeddingProvider& embedder() const noexcept { return embedder_; }

    // instrumentation counters
    std::uint64_t txt2img_calls() const noexcept { return txt2img_calls_.load(); }
    std::uint64_t img2img_calls() const noexcept { return img2img_calls_.load(); }

    /// normalize((1 - s) a + s b)
    static std::vector<double> blend(std::span<const double> a, std::span<const double> b, double s) {
        std::vector<double> out(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - s) * a[i] + s * b[i];
        return normalized(out);
    }

private:
    GeneratedImage make(EmbeddingVector semantic, double strength, std::uint64_t seed) const {
        return GeneratedImage::mock(std::move(semantic), strength, config_.provenance, seed, config_.width,
                                    config_.height, config_.target_payload_bytes);
    }

    MockBackendConfig config_;
    EmbeddingProvider embedder_;
    std::atomic<std::uint64_t> txt2img_calls_{0};
    std::atomic<std::uint64_t> img2img_calls_{0};
};

/// Image-text alignment score used to pick ground-truth strengths.
class AlignmentScorer {
public:
    virtual ~AlignmentScorer() = default;
    virtual double score(const GeneratedImage& image, std::string_view prompt) const = 0;
};

/// cosine(semantic_vec, embed(prompt)) - beta * strength_used.
/// The penalty stands in for the structure lost at high noise levels.
class MockAlignmentScorer final : public AlignmentScorer {
public:
    static constexpr double kDefaultBeta = 0.5;

    MockAlignmentScorer(ProviderConfig embedder, double beta = kDefaultBeta)
        : embedder_(std::move(embedder)), beta_(beta) {
        if (!(beta_ >= 0.0)) raise(ErrorCode::InvalidArgument, "beta must be >= 0");
    }

    double score(const GeneratedImage& image, std::string_view prompt) const override {
        return alignment_score(image, embedder_.embed_text(prompt), beta_);
    }

    static double alignment_score(const GeneratedImage& image, const EmbeddingVector& prompt_vec, double beta) {
        if (!image.semantic_vec()) raise(ErrorCode::MissingSemanticVector, "image has no semantic vector");
        return cosine(image.semantic_vec()->values, prompt_vec.values) - beta * image.strength_used().value_or(0.0);
    }

    double beta() const noexcept { return beta_; }

private:
    EmbeddingProvider embedder_;
    double beta_;
};

/// Precomputed scores (e.g. real CLIP) keyed by image digest and prompt:
/// JSON Lines `{"image": <digest>, "prompt": str, "score": float}`.
class ScoreTableScorer final : public AlignmentScorer {
public:
    explicit ScoreTableScorer(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) raise(ErrorCode::IoError, "cannot open score table " + path.string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                auto rec = nlohmann::json::parse(line);
                table_[{rec.at("image").get<std::string>(), rec.at("prompt").get<std::string>()}] =
                    rec.at("score").get<double>();
            } catch (const nlohmann::json::exception& e) {
                raise(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
    }

    double score(const GeneratedImage& image, std::string_view prompt) const override {
        auto it = table_.find({image.digest(), std::string(prompt)});
        if (it == table_.end()) raise(ErrorCode::CacheMiss, "no score for image " + image.digest());
        return it->second;
    }

private:
    std::map<std::pair<std::string, std::string>, double> table_;
};

}  // namespace diffx
