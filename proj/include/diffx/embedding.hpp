// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "diffx/hashing.hpp"
#include "diffx/image.hpp"
#include "diffx/vector.hpp"

namespace diffx {

enum class ProviderKind { FileCache, HashEmbedder };

struct ProviderConfig {
    ProviderKind kind = ProviderKind::HashEmbedder;
    int dim = 384;
    bool normalize = true;
    std::optional<std::filesystem::path> cache_path;
    std::optional<std::uint64_t> seed = 0;

    static ProviderConfig hash(int dim, std::uint64_t seed, bool normalize = true) {
        return {ProviderKind::HashEmbedder, dim, normalize, std::nullopt, seed};
    }
    static ProviderConfig file(std::filesystem::path path, int dim, bool normalize = true) {
        return {ProviderKind::FileCache, dim, normalize, std::move(path), std::nullopt};
    }
};

// Default dimensions of the three encoder roles.
inline constexpr int kEdgeTextDim = 384;
inline constexpr int kCloudTextDim = 768;
inline constexpr int kImageDim = 512;

/// Lowercased alphanumeric runs; every other byte separates tokens.
/// Bytes >= 0x80 are kept inside tokens so UTF-8 words survive intact.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c >= 0x80) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

/// Loads `{"key": ..., "vec": [...]}` JSON Lines, rejecting vectors whose length is not `dim`.
inline std::unordered_map<std::string, std::vector<double>> load_embedding_cache(
    const std::filesystem::path& path, int dim) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::IoError, "cannot open embedding cache " + path.string());
    std::unordered_map<std::string, std::vector<double>> table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
            auto vec = rec.at("vec").get<std::vector<double>>();
            if (static_cast<int>(vec.size()) != dim) {
                raise(ErrorCode::DimensionMismatch, path.string() + ":" + std::to_string(line_no) +
                                                        ": vector length " + std::to_string(vec.size()) +
                                                        " != " + std::to_string(dim));
            }
            if (!all_finite(vec)) {
                raise(ErrorCode::NonFinite, path.string() + ":" + std::to_string(line_no));
            }
            table.insert_or_assign(rec.at("key").get<std::string>(), std::move(vec));
        } catch (const nlohmann::json::exception& e) {
            raise(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return table;
}

/// Text/image encoder stand-in. Read-only after construction.
class EmbeddingProvider {
public:
    explicit EmbeddingProvider(ProviderConfig config) : config_(std::move(config)) {
        if (config_.dim <= 0) raise(ErrorCode::InvalidArgument, "embedding dim must be positive");
        if (config_.kind == ProviderKind::FileCache) {
            if (!config_.cache_path) raise(ErrorCode::ConfigError, "FileCache provider requires cache_path");
            cache_ = load_embedding_cache(*config_.cache_path, config_.dim);
        } else if (!config_.seed) {
            raise(ErrorCode::ConfigError, "HashEmbedder provider requires a seed");
        }
    }

    const ProviderConfig& config() const noexcept { return config_; }
    int dim() const noexcept { return config_.dim; }

    EmbeddingVector embed_text(std::string_view text) const {
        const auto first = text.find_first_not_of(" \t\r\n");
        if (first == std::string_view::npos) raise(ErrorCode::EmptyText, "text is empty");

        std::vector<double> v;
        if (config_.kind == ProviderKind::FileCache) {
            auto it = cache_.find(std::string(text));
            if (it == cache_.end()) raise(ErrorCode::CacheMiss, "no cached embedding for '" + std::string(text) + "'");
            v = it->second;
        } else {
            v = hash_embed(text);
        }
        return finish(std::move(v));
    }

    /// Mock images: stored semantic vector truncated or zero-padded to `dim`.
    /// Remote images: cache lookup by content digest.
    EmbeddingVector embed_image(const GeneratedImage& image) const {
        if (image.semantic_vec()) {
            const auto& src = image.semantic_vec()->values;
            std::vector<double> v(static_cast<std::size_t>(config_.dim), 0.0);
            std::copy_n(src.begin(), std::min(src.size(), v.size()), v.begin());
            if (l2_norm(v) == 0.0) {
                raise(ErrorCode::DimensionMismatch,
                      "semantic vector has no mass in the first " + std::to_string(config_.dim) + " entries");
            }
            return finish(std::move(v));
        }
        if (config_.kind != ProviderKind::FileCache) {
            raise(ErrorCode::MissingSemanticVector, "image has no semantic vector and provider has no cache");
        }
        auto it = cache_.find(image.digest());
        if (it == cache_.end()) raise(ErrorCode::CacheMiss, "no cached embedding for image " + image.digest());
        return finish(it->second);
    }

private:
    std::vector<double> hash_embed(std::string_view text) const {
        const auto tokens = tokenize(text);
        if (tokens.empty()) raise(ErrorCode::EmptyText, "text has no tokens");
        std::vector<double> v(static_cast<std::size_t>(config_.dim), 0.0);
        for (const auto& tok : tokens) {
            const std::uint64_t h = seeded_hash(tok, *config_.seed);
            const double sign = (h >> 63) ? 1.0 : -1.0;
            v[static_cast<std::size_t>(h % static_cast<std::uint64_t>(config_.dim))] += sign;
        }
        if (l2_norm(v) == 0.0) {
            // every token cancelled against a colliding one
            v[seeded_hash(text, *config_.seed ^ 0x5bd1e995ULL) % static_cast<std::uint64_t>(config_.dim)] = 1.0;
        }
        return v;
    }

    EmbeddingVector finish(std::vector<double> v) const {
        if (config_.normalize) v = normalized(v);
        return EmbeddingVector{std::move(v)};
    }

    ProviderConfig config_;
    std::unordered_map<std::string, std::vector<double>> cache_;
};

inline EmbeddingVector embed_text(const EmbeddingProvider& provider, std::string_view text) {
    return provider.embed_text(text);
}

inline EmbeddingVector embed_image(const EmbeddingProvider& provider, const GeneratedImage& image) {
    return provider.embed_image(image);
}

}  // namespace diffx
