// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "diffx/service/http_api.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diffx orchestration service"};
    std::optional<std::string> config_path;
    app.add_option("--config", config_path, "key = value config file; DIFFX_<KEY> variables override it");
    CLI11_PARSE(app, argc, argv);

    try {
        const auto config = diffx::load_config(config_path);
        auto orchestrator = diffx::Orchestrator::from_config(config);
        diffx::ApiServer server(*orchestrator);
        const int port = server.start(config.host(), config.port());
        std::cout << "diffx-serve listening on " << config.host() << ':' << port << std::endl;

        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
    } catch (const diffx::Error& e) {
        std::cerr << "diffx-serve: " << e.what() << '\n';
        return e.code() == diffx::ErrorCode::ConfigError ? 4 : 1;
    } catch (const std::exception& e) {
        std::cerr << "diffx-serve: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
