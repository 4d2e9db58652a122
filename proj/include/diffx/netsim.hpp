// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffx/core.hpp"

namespace diffx {

struct NetworkConfig {
    double uplink_bps = 20'000'000.0;
    double downlink_bps = 20'000'000.0;

    void validate() const {
        if (!(uplink_bps > 0.0) || !(downlink_bps > 0.0)) {
            raise(ErrorCode::ConfigError, "link bandwidths must be positive");
        }
    }
};

/// payload_bytes * 8 / bps
inline double transmission_latency(std::uint64_t payload_bytes, double bps) {
    if (!(bps > 0.0)) raise(ErrorCode::InvalidArgument, "bandwidth must be positive");
    return static_cast<double>(payload_bytes) * 8.0 / bps;
}

/// Simulated generation cost: base_overhead_s + steps * per_step_s.
struct BackendCostModel {
    double per_step_s = 0.0;
    double base_overhead_s = 0.0;
    Tier tier = Tier::Edge;

    // Calibrated so a 25-step full generation costs 14.15 s on the cloud and
    // 11.79 s on the edge. These reproduce the reference latencies by construction.
    static BackendCostModel cloud_default() { return {0.550, 0.40, Tier::Cloud}; }
    static BackendCostModel edge_default() { return {0.456, 0.39, Tier::Edge}; }
};

inline double simulate_generation_time(int plan_steps, const BackendCostModel& cost) {
    if (plan_steps < 1) raise(ErrorCode::InvalidArgument, "plan_steps must be >= 1");
    if (!(cost.per_step_s >= 0.0) || !(cost.base_overhead_s >= 0.0)) {
        raise(ErrorCode::InvalidArgument, "cost model fields must be >= 0");
    }
    return cost.base_overhead_s + plan_steps * cost.per_step_s;
}

/// One completed session as seen by the metrics aggregator.
struct SessionSummary {
    std::string scenario;
    std::optional<double> transmit_s;  // absent for single-tier scenarios
    double total_s = 0.0;
    double steps = 0.0;
};

struct MetricsRow {
    std::string scenario;
    std::optional<double> mean_trans_s;
    double mean_total_s = 0.0;
    double mean_steps = 0.0;
    std::size_t n_sessions = 0;
    std::optional<double> delta_pct;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct MetricsReport {
    std::vector<MetricsRow> rows;
    std::optional<std::string> baseline;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// (base - x) / base * 100, rounded to one decimal. Positive means faster than the baseline.
inline double percentage_delta(double base, double x) {
    if (!(base > 0.0)) raise(ErrorCode::InvalidArgument, "baseline mean must be positive");
    return std::round((base - x) / base * 1000.0) / 10.0;
}

namespace detail {
// Summing in sorted order makes the mean independent of input order, bit for bit.
inline double order_free_mean(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}
}  // namespace detail

/// Groups summaries by scenario. Rows follow `scenario_order` when given
/// (every listed scenario must have at least one session), otherwise the
/// scenario names sorted. The baseline, if named, must be one of the rows.
inline MetricsReport aggregate(const std::vector<SessionSummary>& sessions,
                               const std::vector<std::string>& scenario_order = {},
                               const std::optional<std::string>& baseline = std::nullopt) {
    std::map<std::string, std::vector<const SessionSummary*>> groups;
    for (const auto& s : sessions) groups[s.scenario].push_back(&s);

    std::vector<std::string> names = scenario_order;
    if (names.empty()) {
        for (const auto& [name, _] : groups) names.push_back(name);
    }
    MetricsReport report;
    report.baseline = baseline;
    for (const auto& name : names) {
        auto it = groups.find(name);
        if (it == groups.end() || it->second.empty()) {
            raise(ErrorCode::EmptyScenario, "scenario '" + name + "' has no completed sessions");
        }
        std::vector<double> totals;
        std::vector<double> steps;
        std::vector<double> trans;
        for (const auto* s : it->second) {
            totals.push_back(s->total_s);
            steps.push_back(s->steps);
            if (s->transmit_s) trans.push_back(*s->transmit_s);
        }
        MetricsRow row;
        row.scenario = name;
        row.n_sessions = it->second.size();
        row.mean_total_s = detail::order_free_mean(totals);
        row.mean_steps = detail::order_free_mean(steps);
        if (!trans.empty()) row.mean_trans_s = detail::order_free_mean(trans);
        report.rows.push_back(std::move(row));
    }
    if (baseline) {
        auto base = std::find_if(report.rows.begin(), report.rows.end(),
                                 [&](const MetricsRow& r) { return r.scenario == *baseline; });
        if (base == report.rows.end()) {
            raise(ErrorCode::EmptyScenario, "baseline scenario '" + *baseline + "' has no sessions");
        }
        const double base_total = base->mean_total_s;
        for (auto& row : report.rows) row.delta_pct = percentage_delta(base_total, row.mean_total_s);
    }
    return report;
}

/// JSON mirror of the report table. Row keys are exactly
/// {scenario, trans_latency_s, total_latency_s, delta_pct}; per-row counts
/// live in a separate "sessions" object.
inline nlohmann::ordered_json report_to_json(const MetricsReport& report) {
    nlohmann::ordered_json j;
    j["baseline"] = report.baseline ? nlohmann::ordered_json(*report.baseline) : nlohmann::ordered_json();
    auto rows = nlohmann::ordered_json::array();
    auto sessions = nlohmann::ordered_json::object();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json row;
        row["scenario"] = r.scenario;
        row["trans_latency_s"] = r.mean_trans_s ? nlohmann::ordered_json(*r.mean_trans_s) : nlohmann::ordered_json();
        row["total_latency_s"] = r.mean_total_s;
        row["delta_pct"] = r.delta_pct ? nlohmann::ordered_json(*r.delta_pct) : nlohmann::ordered_json();
        rows.push_back(std::move(row));
        sessions[r.scenario] = {{"n_sessions", r.n_sessions}, {"mean_steps", r.mean_steps}};
    }
    j["rows"] = std::move(rows);
    j["sessions"] = std::move(sessions);
    return j;
}

inline MetricsReport report_from_json(const nlohmann::json& j) {
    MetricsReport report;
    if (j.contains("baseline") && !j["baseline"].is_null()) report.baseline = j["baseline"].get<std::string>();
    for (const auto& row : j.at("rows")) {
        MetricsRow r;
        r.scenario = row.at("scenario").get<std::string>();
        if (!row.at("trans_latency_s").is_null()) r.mean_trans_s = row["trans_latency_s"].get<double>();
        r.mean_total_s = row.at("total_latency_s").get<double>();
        if (!row.at("delta_pct").is_null()) r.delta_pct = row["delta_pct"].get<double>();
        if (j.contains("sessions") && j["sessions"].contains(r.scenario)) {
            r.n_sessions = j["sessions"][r.scenario].at("n_sessions").get<std::size_t>();
            r.mean_steps = j["sessions"][r.scenario].at("mean_steps").get<double>();
        }
        report.rows.push_back(std::move(r));
    }
    return report;
}

/// Aligned text table; single-tier rows show "-" for transmission.
inline std::string report_to_table(const MetricsReport& report) {
    auto fmt = [](double v, int prec) {
        std::ostringstream os;
        os << std::fixed << std::setprecision(prec) << v;
        return os.str();
    };
    std::vector<std::array<std::string, 4>> cells;
    cells.push_back({"scenario", "trans_latency_s", "total_latency_s", "delta_pct"});
    for (const auto& r : report.rows) {
        cells.push_back({r.scenario, r.mean_trans_s ? fmt(*r.mean_trans_s, 2) : "-", fmt(r.mean_total_s, 2),
                         r.delta_pct ? fmt(*r.delta_pct, 1) : "-"});
    }
    std::array<std::size_t, 4> width{};
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream os;
    for (const auto& row : cells) {
        os << std::left << std::setw(static_cast<int>(width[0])) << row[0];
        for (std::size_t c = 1; c < 4; ++c) {
            os << "  " << std::right << std::setw(static_cast<int>(width[c])) << row[c];
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace diffx
