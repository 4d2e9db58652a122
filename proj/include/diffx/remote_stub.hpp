// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <json.hpp>

#include "diffx/detail/httplib.hpp"
#include "diffx/codec.hpp"
#include "diffx/embedding.hpp"
#include "diffx/image.hpp"
#include "diffx/remote.hpp"

namespace diffx {

/// In-process implementation of the remote generate contract, for tests and
/// local runs. Renders the mock band pattern for the request prompt.
class StubGenerateServer {
public:
    enum class Behavior { Ok, MalformedBody, Unavailable, BadDimensions };

    struct Options {
        int width = 64;
        int height = 64;
        std::chrono::milliseconds delay{0};
        Behavior behavior = Behavior::Ok;
    };

    explicit StubGenerateServer(Options options) : options_(options) {
        server_.Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
            handle(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        if (port_ <= 0) raise(ErrorCode::IoError, "stub server could not bind");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    StubGenerateServer() : StubGenerateServer(Options{}) {}

    ~StubGenerateServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    StubGenerateServer(const StubGenerateServer&) = delete;
    StubGenerateServer& operator=(const StubGenerateServer&) = delete;

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int port() const noexcept { return port_; }
    std::uint64_t requests() const noexcept { return requests_.load(); }
    GenerateRequest last_request() const {
        std::lock_guard lock(mutex_);
        return last_;
    }

private:
    void handle(const httplib::Request& req, httplib::Response& res) {
        ++requests_;
        if (options_.delay.count() > 0) std::this_thread::sleep_for(options_.delay);
        if (options_.behavior == Behavior::Unavailable) {
            res.status = 503;
            return;
        }
        if (options_.behavior == Behavior::MalformedBody) {
            res.set_content("{\"image_b64\": ", "application/json");
            return;
        }
        GenerateRequest parsed;
        try {
            parsed = GenerateRequest::from_json(nlohmann::json::parse(req.body));
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(e.what(), "text/plain");
            return;
        }
        {
            std::lock_guard lock(mutex_);
            last_ = parsed;
        }
        const EmbeddingProvider embed(ProviderConfig::hash(kImageDim, 3));
        const auto raster = render_bands(embed.embed_text(parsed.prompt), parsed.seed, options_.width, options_.height);
        const int declared = options_.behavior == Behavior::BadDimensions ? options_.width + 1 : options_.width;
        const nlohmann::json body{{"width", declared},
                                  {"height", options_.height},
                                  {"image_b64", base64_encode(png::encode(raster))}};
        res.set_content(body.dump(), "application/json");
    }

    Options options_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<std::uint64_t> requests_{0};
    mutable std::mutex mutex_;
    GenerateRequest last_;
};

}  // namespace diffx
