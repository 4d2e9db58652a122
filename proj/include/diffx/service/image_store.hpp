// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffx/image.hpp"

namespace diffx {

/// Content-addressed image files: `<digest>.png` holds the container bytes,
/// `<digest>.json` the generation metadata needed to keep editing the image
/// (latent vector, strength, seed, provenance).
class ImageStore {
public:
    explicit ImageStore(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) raise(ErrorCode::IoError, "cannot create image directory " + dir_.string() + ": " + ec.message());
    }

    std::string put(const GeneratedImage& image) {
        const std::string digest = image.digest();
        std::lock_guard lock(mutex_);
        if (std::filesystem::exists(png_path(digest)) && std::filesystem::exists(meta_path(digest))) return digest;
        write_atomic(png_path(digest), image.encoded());

        nlohmann::ordered_json meta;
        meta["provenance"] = std::string(to_string(image.provenance()));
        meta["seed"] = image.seed();
        meta["strength_used"] = image.strength_used() ? nlohmann::ordered_json(*image.strength_used()) : nullptr;
        meta["semantic_vec"] = image.semantic_vec() ? nlohmann::ordered_json(image.semantic_vec()->values) : nullptr;
        const std::string text = meta.dump();
        write_atomic(meta_path(digest), std::vector<std::uint8_t>(text.begin(), text.end()));
        return digest;
    }

    bool contains(const std::string& digest) const {
        return valid_digest(digest) && std::filesystem::exists(png_path(digest));
    }

    std::vector<std::uint8_t> bytes(const std::string& digest) const {
        if (!valid_digest(digest)) raise(ErrorCode::InvalidArgument, "malformed image digest");
        return read_file(png_path(digest));
    }

    GeneratedImage get(const std::string& digest) const {
        auto data = bytes(digest);
        const auto raw = read_file(meta_path(digest));
        try {
            const auto meta = nlohmann::json::parse(raw.begin(), raw.end());
            std::optional<double> strength;
            if (!meta.at("strength_used").is_null()) strength = meta["strength_used"].get<double>();
            std::optional<EmbeddingVector> semantic;
            if (!meta.at("semantic_vec").is_null()) {
                semantic = EmbeddingVector{meta["semantic_vec"].get<std::vector<double>>()};
            }
            return GeneratedImage::from_container(std::move(data),
                                                  provenance_from_string(meta.at("provenance").get<std::string>()),
                                                  meta.at("seed").get<std::uint64_t>(), strength, std::move(semantic));
        } catch (const nlohmann::json::exception& e) {
            raise(ErrorCode::ParseError, "corrupt image metadata for " + digest + ": " + e.what());
        }
    }

    const std::filesystem::path& dir() const noexcept { return dir_; }

    static bool valid_digest(const std::string& d) {
        return d.size() == 64 && d.find_first_not_of("0123456789abcdef") == std::string::npos;
    }

private:
    std::filesystem::path png_path(const std::string& d) const { return dir_ / (d + ".png"); }
    std::filesystem::path meta_path(const std::string& d) const { return dir_ / (d + ".json"); }

    static void write_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& data) {
        auto tmp = path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
            out.flush();
            if (!out) raise(ErrorCode::IoError, "cannot write " + tmp.string());
        }
        std::filesystem::rename(tmp, path);
    }

    static std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) raise(ErrorCode::IoError, "no such image " + path.filename().string());
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    std::filesystem::path dir_;
    std::mutex mutex_;
};

}  // namespace diffx
