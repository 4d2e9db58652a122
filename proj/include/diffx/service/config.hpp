// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diffx/core.hpp"
#include "diffx/netsim.hpp"
#include "diffx/scheduler.hpp"

namespace diffx {

/// Orchestrator settings. File format is one `key = value` per line with `#`
/// comments; every key can be overridden by `DIFFX_<KEY>` in the environment
/// (key upper-cased).
///
///   listen_addr        host:port                        127.0.0.1:8080
///   edge_backend       mock | http://host:port          mock
///   cloud_backend      mock | http://host:port          mock
///   edge_weights       path to edge predictor weights   (unset)
///   cloud_weights      path to cloud predictor weights  (unset)
///   predictor_enabled  true | false                     false
///   fixed_strength     strength when predictors are off 0.90
///   uplink_bps         edge -> cloud bits per second    20000000
///   downlink_bps       cloud -> edge bits per second    20000000
///   base_steps_edge    full edge schedule length        25
///   base_steps_cloud   full cloud schedule length       25
///   t_max              highest timestep index           999
///   persistence_path   directory for log and images     ./diffx-data
///   seed               generation seed                  0
///   simulate_latency   cost-model clock instead of wall true
///   remote_timeout_ms  per-request remote timeout       120000
struct ServiceConfig {
    std::string listen_addr = "127.0.0.1:8080";
    std::string edge_backend = "mock";
    std::string cloud_backend = "mock";
    std::optional<std::filesystem::path> edge_weights;
    std::optional<std::filesystem::path> cloud_weights;
    bool predictor_enabled = false;
    Strength fixed_strength{0.90};
    NetworkConfig network;
    int base_steps_edge = 25;
    int base_steps_cloud = 25;
    int t_max = kDefaultTMax;
    std::filesystem::path persistence_path = "diffx-data";
    std::uint64_t seed = 0;
    bool simulate_latency = true;
    int remote_timeout_ms = 120'000;
    BackendCostModel edge_cost = BackendCostModel::edge_default();
    BackendCostModel cloud_cost = BackendCostModel::cloud_default();
    double predict_edge_s = 0.01;
    double predict_cloud_s = 0.01;

    void validate(const CandidateSet& grid = CandidateSet::standard()) const {
        if (!(fixed_strength.value >= grid.min().value && fixed_strength.value <= grid.max().value)) {
            raise(ErrorCode::ConfigError, "fixed_strength must lie in the strength grid range");
        }
        if (base_steps_edge < 1 || base_steps_cloud < 1) raise(ErrorCode::ConfigError, "base steps must be >= 1");
        if (t_max < 0) raise(ErrorCode::ConfigError, "t_max must be >= 0");
        if (remote_timeout_ms <= 0) raise(ErrorCode::ConfigError, "remote_timeout_ms must be positive");
        if (!(network.uplink_bps > 0.0) || !(network.downlink_bps > 0.0)) {
            raise(ErrorCode::ConfigError, "bandwidths must be positive");
        }
        if (listen_addr.rfind(':') == std::string::npos) raise(ErrorCode::ConfigError, "listen_addr must be host:port");
    }

    std::string host() const { return listen_addr.substr(0, listen_addr.rfind(':')); }
    int port() const { return std::stoi(listen_addr.substr(listen_addr.rfind(':') + 1)); }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) raise(ErrorCode::ConfigError, key + ": not a number: '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    raise(ErrorCode::ConfigError, key + ": not a boolean: '" + v + "'");
}

using Setter = std::function<void(ServiceConfig&, const std::string&, const std::string&)>;

inline const std::map<std::string, Setter>& config_setters() {
    static const std::map<std::string, Setter> setters = {
        {"listen_addr", [](auto& c, auto&, auto& v) { c.listen_addr = v; }},
        {"edge_backend", [](auto& c, auto&, auto& v) { c.edge_backend = v; }},
        {"cloud_backend", [](auto& c, auto&, auto& v) { c.cloud_backend = v; }},
        {"edge_weights", [](auto& c, auto&, auto& v) { c.edge_weights = v.empty() ? std::nullopt : std::optional<std::filesystem::path>(v); }},
        {"cloud_weights", [](auto& c, auto&, auto& v) { c.cloud_weights = v.empty() ? std::nullopt : std::optional<std::filesystem::path>(v); }},
        {"predictor_enabled", [](auto& c, auto& k, auto& v) { c.predictor_enabled = parse_bool(k, v); }},
        {"fixed_strength", [](auto& c, auto& k, auto& v) { c.fixed_strength = Strength{parse_number<double>(k, v)}; }},
        {"uplink_bps", [](auto& c, auto& k, auto& v) { c.network.uplink_bps = parse_number<double>(k, v); }},
        {"downlink_bps", [](auto& c, auto& k, auto& v) { c.network.downlink_bps = parse_number<double>(k, v); }},
        {"base_steps_edge", [](auto& c, auto& k, auto& v) { c.base_steps_edge = parse_number<int>(k, v); }},
        {"base_steps_cloud", [](auto& c, auto& k, auto& v) { c.base_steps_cloud = parse_number<int>(k, v); }},
        {"t_max", [](auto& c, auto& k, auto& v) { c.t_max = parse_number<int>(k, v); }},
        {"persistence_path", [](auto& c, auto&, auto& v) { c.persistence_path = v; }},
        {"seed", [](auto& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
        {"simulate_latency", [](auto& c, auto& k, auto& v) { c.simulate_latency = parse_bool(k, v); }},
        {"remote_timeout_ms", [](auto& c, auto& k, auto& v) { c.remote_timeout_ms = parse_number<int>(k, v); }},
    };
    return setters;
}

inline void apply_setting(ServiceConfig& cfg, const std::string& key, const std::string& value) {
    const auto& setters = config_setters();
    auto it = setters.find(key);
    if (it == setters.end()) raise(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    it->second(cfg, key, value);
}

}  // namespace detail

inline ServiceConfig parse_config_text(const std::string& text, ServiceConfig cfg = {}) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            raise(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": expected key = value");
        }
        detail::apply_setting(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return cfg;
}

/// `lookup` maps an environment variable name to its value; defaults to getenv.
inline ServiceConfig apply_env_overrides(ServiceConfig cfg,
                                         const std::function<std::optional<std::string>(const std::string&)>& lookup =
                                             [](const std::string& name) -> std::optional<std::string> {
                                             const char* v = std::getenv(name.c_str());
                                             return v ? std::optional<std::string>(v) : std::nullopt;
                                         }) {
    for (const auto& [key, _] : detail::config_setters()) {
        std::string env = "DIFFX_";
        for (char c : key) env.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        if (auto v = lookup(env)) detail::apply_setting(cfg, key, detail::trim(*v));
    }
    return cfg;
}

inline ServiceConfig load_config(const std::optional<std::filesystem::path>& path) {
    ServiceConfig cfg;
    if (path) {
        std::ifstream in(*path);
        if (!in) raise(ErrorCode::ConfigError, "cannot read config " + path->string());
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        cfg = parse_config_text(text);
    }
    cfg = apply_env_overrides(std::move(cfg));
    cfg.validate();
    return cfg;
}

}  // namespace diffx
