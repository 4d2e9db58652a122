// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffx/detail/httplib.hpp"
#include "diffx/backend.hpp"
#include "diffx/codec.hpp"

namespace diffx {

/// Wire request for `POST /v1/generate`.
struct GenerateRequest {
    std::string mode;  // "txt2img" | "img2img"
    std::string prompt;
    std::optional<double> strength;
    std::optional<std::vector<int>> timesteps;
    int steps = 1;
    std::uint64_t seed = 0;
    std::optional<std::string> init_image_b64;

    nlohmann::json to_json() const {
        nlohmann::json j{{"mode", mode}, {"prompt", prompt}, {"steps", steps}, {"seed", seed}};
        if (strength) j["strength"] = *strength;
        if (timesteps) j["timesteps"] = *timesteps;
        if (init_image_b64) j["init_image_b64"] = *init_image_b64;
        return j;
    }

    static GenerateRequest from_json(const nlohmann::json& j) {
        GenerateRequest r;
        r.mode = j.at("mode").get<std::string>();
        if (r.mode != "txt2img" && r.mode != "img2img") {
            raise(ErrorCode::ProtocolError, "unknown mode '" + r.mode + "'");
        }
        r.prompt = j.at("prompt").get<std::string>();
        r.steps = j.at("steps").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("strength") && !j["strength"].is_null()) r.strength = j["strength"].get<double>();
        if (j.contains("timesteps") && !j["timesteps"].is_null()) {
            r.timesteps = j["timesteps"].get<std::vector<int>>();
        }
        if (j.contains("init_image_b64") && !j["init_image_b64"].is_null()) {
            r.init_image_b64 = j["init_image_b64"].get<std::string>();
        }
        return r;
    }
};

struct RemoteEndpoint {
    std::string base_url;  // scheme://host[:port]
    std::chrono::milliseconds timeout{120'000};
};

/// Issues one request and validates the response. Never fabricates an image:
/// every failure surfaces as BackendUnavailable, Timeout or ProtocolError.
inline GeneratedImage remote_generate(const RemoteEndpoint& endpoint, const GenerateRequest& request) {
    httplib::Client client(endpoint.base_url);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post("/v1/generate", request.to_json().dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                               (err == httplib::Error::Read &&
                                std::chrono::steady_clock::now() - started >= endpoint.timeout);
        if (timed_out) raise(ErrorCode::Timeout, endpoint.base_url + " did not answer in time");
        raise(ErrorCode::BackendUnavailable, endpoint.base_url + ": " + httplib::to_string(err));
    }
    if (res->status == 503 || res->status == 502) {
        raise(ErrorCode::BackendUnavailable, endpoint.base_url + " answered " + std::to_string(res->status));
    }
    if (res->status != 200) {
        raise(ErrorCode::ProtocolError, endpoint.base_url + " answered " + std::to_string(res->status));
    }

    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bytes;
    try {
        const auto body = nlohmann::json::parse(res->body);
        width = body.at("width").get<int>();
        height = body.at("height").get<int>();
        bytes = base64_decode(body.at("image_b64").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::ProtocolError, std::string("malformed generate response: ") + e.what());
    }
    if (width <= 0 || height <= 0) raise(ErrorCode::ProtocolError, "non-positive image dimensions");
    const auto header = png::read_header(bytes);
    if (header.width != width || header.height != height) {
        raise(ErrorCode::ProtocolError, "declared dimensions do not match the image container");
    }
    return GeneratedImage::from_container(std::move(bytes), Provenance::Remote, request.seed, request.strength);
}

/// Backend adapter over the remote wire contract.
class RemoteBackend final : public GenerationBackend {
public:
    explicit RemoteBackend(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

    GeneratedImage txt2img(std::string_view prompt, int steps, std::uint64_t seed) override {
        GenerateRequest req;
        req.mode = "txt2img";
        req.prompt = std::string(prompt);
        req.steps = steps;
        req.seed = seed;
        return remote_generate(endpoint_, req);
    }

    GeneratedImage img2img(const GeneratedImage& image, std::string_view prompt, const DenoisePlan& plan,
                           std::uint64_t seed) override {
        GenerateRequest req;
        req.mode = "img2img";
        req.prompt = std::string(prompt);
        req.strength = plan.strength.value;
        req.timesteps = plan.timesteps;
        req.steps = plan.steps;
        req.seed = seed;
        req.init_image_b64 = base64_encode(image.encoded());
        return remote_generate(endpoint_, req);
    }

    std::string name() const override { return endpoint_.base_url; }

private:
    RemoteEndpoint endpoint_;
};

}  // namespace diffx
