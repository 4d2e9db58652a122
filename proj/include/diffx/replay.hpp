// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "diffx/backend.hpp"
#include "diffx/dataset.hpp"
#include "diffx/json_io.hpp"
#include "diffx/netsim.hpp"
#include "diffx/predictor.hpp"
#include "diffx/scheduler.hpp"

namespace diffx {

enum class Scenario { CloudOnly, EdgeOnly, EdgeCloud };

inline std::string_view to_string(Scenario s) {
    switch (s) {
    case Scenario::CloudOnly: return "cloud-only";
    case Scenario::EdgeOnly: return "edge-only";
    case Scenario::EdgeCloud: return "diffusionx";
    }
    return "?";
}

inline Scenario scenario_from_string(std::string_view s) {
    for (Scenario sc : {Scenario::CloudOnly, Scenario::EdgeOnly, Scenario::EdgeCloud}) {
        if (to_string(sc) == s) return sc;
    }
    raise(ErrorCode::ConfigError, "unknown scenario '" + std::string(s) + "'");
}

/// Report row name; the collaborative pipeline is tagged by predictor use.
inline std::string scenario_tag(Scenario s, bool predictor_on) {
    std::string tag(to_string(s));
    if (s == Scenario::EdgeCloud && !predictor_on) tag += "-no-predictor";
    return tag;
}

struct ReplayConfig {
    CandidateSet grid = CandidateSet::standard();
    int base_steps_edge = 25;
    int base_steps_cloud = 25;
    int t_max = kDefaultTMax;
    NetworkConfig network;
    BackendCostModel edge_cost = BackendCostModel::edge_default();
    BackendCostModel cloud_cost = BackendCostModel::cloud_default();
    double predict_edge_s = 0.01;
    double predict_cloud_s = 0.01;
    // strength used on both tiers when the predictors are switched off
    Strength fixed_strength{0.90};
    MockBackendConfig edge_backend{ProviderConfig::hash(kImageDim, 3), Provenance::MockEdge};
    MockBackendConfig cloud_backend{ProviderConfig::hash(kImageDim, 3), Provenance::MockCloud};
};

struct Predictors {
    std::optional<MlpParams> edge;
    std::optional<MlpParams> cloud;
};

struct SessionLog {
    std::string session_id;
    std::string scenario;
    std::vector<RoundRecord> records;
    int edge_steps = 0;
    int cloud_steps = 0;
    SessionSummary summary;
};

struct ReplayResult {
    std::vector<SessionLog> logs;
    MetricsReport report;
};

/// Replays every session on the simulated clock. The per-session latency is
/// the latency of the round that delivered the final image: the last
/// regeneration for single-tier scenarios, the cloud refinement (including
/// the draft upload) for the collaborative pipeline.
class ReplayEngine {
public:
    ReplayEngine(ReplayConfig config, Predictors predictors, FeatureEncoders encoders = {})
        : config_(std::move(config)),
          predictors_(std::move(predictors)),
          encoders_(std::move(encoders)),
          edge_(config_.edge_backend),
          cloud_(config_.cloud_backend) {
        config_.network.validate();
    }

    SessionLog run_session(const InteractiveSession& session, Scenario scenario, bool predictor_on,
                           std::uint64_t seed) {
        if (session.rounds.empty()) raise(ErrorCode::ParseError, "session '" + session.id + "' has no rounds");
        if (scenario == Scenario::EdgeCloud && predictor_on && (!predictors_.edge || !predictors_.cloud)) {
            raise(ErrorCode::ConfigError, "predictor mode requires edge and cloud weights");
        }
        SessionLog log;
        log.session_id = session.id;
        log.scenario = scenario_tag(scenario, predictor_on);

        switch (scenario) {
        case Scenario::CloudOnly:
        case Scenario::EdgeOnly: {
            const bool cloud = scenario == Scenario::CloudOnly;
            const int steps = cloud ? config_.base_steps_cloud : config_.base_steps_edge;
            auto& backend = cloud ? cloud_ : edge_;
            for (std::size_t r = 0; r < session.rounds.size(); ++r) {
                backend.txt2img(session.rounds[r], steps, seed);
                RoundRecord rec;
                rec.round_index = static_cast<int>(r) + 1;
                rec.prompt = session.rounds[r];
                rec.steps_executed = steps;
                rec.tier = cloud ? Tier::Cloud : Tier::Edge;
                rec.latency = assemble_round(
                    0.0, simulate_generation_time(steps, cloud ? config_.cloud_cost : config_.edge_cost), 0.0);
                (cloud ? log.cloud_steps : log.edge_steps) += steps;
                log.records.push_back(std::move(rec));
            }
            log.summary = {log.scenario, std::nullopt, log.records.back().latency.total_s,
                           static_cast<double>(log.records.back().steps_executed)};
            break;
        }
        case Scenario::EdgeCloud: {
            GeneratedImage draft = edge_.txt2img(session.rounds[0], config_.base_steps_edge, seed);
            {
                RoundRecord rec;
                rec.round_index = 1;
                rec.prompt = session.rounds[0];
                rec.steps_executed = config_.base_steps_edge;
                rec.tier = Tier::Edge;
                rec.latency = assemble_round(0.0, simulate_generation_time(rec.steps_executed, config_.edge_cost), 0.0);
                log.edge_steps += rec.steps_executed;
                log.records.push_back(std::move(rec));
            }
            for (std::size_t r = 1; r < session.rounds.size(); ++r) {
                const Strength s =
                    predictor_on ? predict_edge_strength(*predictors_.edge,
                                                         encoders_.edge_text.embed_text(session.rounds[r - 1]),
                                                         encoders_.edge_text.embed_text(session.rounds[r]), config_.grid)
                                 : clip_strength(config_.fixed_strength.value, config_.grid);
                const DenoisePlan plan = plan_for_strength(s, config_.base_steps_edge, config_.t_max);
                draft = edge_.img2img(draft, session.rounds[r], plan, seed);
                RoundRecord rec;
                rec.round_index = static_cast<int>(r) + 1;
                rec.prompt = session.rounds[r];
                rec.predicted_strength = s;
                rec.steps_executed = plan.steps;
                rec.tier = Tier::Edge;
                rec.latency = assemble_round(predictor_on ? config_.predict_edge_s : 0.0,
                                             simulate_generation_time(plan.steps, config_.edge_cost), 0.0);
                log.edge_steps += plan.steps;
                log.records.push_back(std::move(rec));
            }
            const std::string& confirmed = session.rounds.back();
            const double transmit = transmission_latency(draft.payload_bytes(), config_.network.uplink_bps);
            const Strength s = predictor_on ? predict_cloud_strength(*predictors_.cloud,
                                                                     encoders_.cloud_text.embed_text(confirmed),
                                                                     encoders_.image.embed_image(draft), config_.grid)
                                            : clip_strength(config_.fixed_strength.value, config_.grid);
            const DenoisePlan plan = plan_for_strength(s, config_.base_steps_cloud, config_.t_max);
            cloud_.img2img(draft, confirmed, plan, seed);
            RoundRecord rec;
            rec.round_index = static_cast<int>(session.rounds.size());
            rec.prompt = confirmed;
            rec.predicted_strength = s;
            rec.steps_executed = plan.steps;
            rec.tier = Tier::Cloud;
            rec.latency = assemble_round(predictor_on ? config_.predict_cloud_s : 0.0,
                                         simulate_generation_time(plan.steps, config_.cloud_cost), transmit);
            log.cloud_steps += plan.steps;
            log.records.push_back(rec);
            log.summary = {log.scenario, transmit, rec.latency.total_s, static_cast<double>(plan.steps)};
            break;
        }
        }
        return log;
    }

    /// Runs each (scenario, predictor) pass over all sessions and aggregates
    /// one row per pass. `baseline` names the row used for the delta column.
    ReplayResult replay(const std::vector<InteractiveSession>& sessions,
                        const std::vector<std::pair<Scenario, bool>>& passes, std::uint64_t seed,
                        const std::optional<std::string>& baseline = std::nullopt) {
        ReplayResult result;
        std::vector<SessionSummary> summaries;
        std::vector<std::string> order;
        for (const auto& [scenario, predictor_on] : passes) {
            order.push_back(scenario_tag(scenario, predictor_on));
            for (std::size_t i = 0; i < sessions.size(); ++i) {
                auto log = run_session(sessions[i], scenario, predictor_on, mix64(seed + i));
                summaries.push_back(log.summary);
                result.logs.push_back(std::move(log));
            }
        }
        result.report = aggregate(summaries, order, baseline);
        return result;
    }

    const MockBackend& edge_backend() const noexcept { return edge_; }
    const MockBackend& cloud_backend() const noexcept { return cloud_; }
    const ReplayConfig& config() const noexcept { return config_; }

private:
    ReplayConfig config_;
    Predictors predictors_;
    FeatureEncoders encoders_;
    MockBackend edge_;
    MockBackend cloud_;
};

inline nlohmann::ordered_json session_log_json(const SessionLog& log) {
    nlohmann::ordered_json j;
    j["session"] = log.session_id;
    j["scenario"] = log.scenario;
    j["edge_steps"] = log.edge_steps;
    j["cloud_steps"] = log.cloud_steps;
    auto recs = nlohmann::ordered_json::array();
    for (const auto& r : log.records) recs.push_back(record_json(r));
    j["records"] = std::move(recs);
    return j;
}

}  // namespace diffx
