// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffx/backend.hpp"
#include "diffx/json_io.hpp"
#include "diffx/netsim.hpp"
#include "diffx/predictor.hpp"
#include "diffx/remote.hpp"
#include "diffx/replay.hpp"
#include "diffx/service/config.hpp"
#include "diffx/service/event_log.hpp"
#include "diffx/service/image_store.hpp"
#include "diffx/weights_io.hpp"

namespace diffx {

/// Read-only copy of one session.
struct SessionView {
    SessionState state;
    bool predictor_enabled = false;
    std::string scenario;
};

inline nlohmann::ordered_json session_view_json(const SessionView& v) {
    nlohmann::ordered_json j;
    j["session_id"] = v.state.session_id;
    j["phase"] = std::string(to_string(v.state.phase));
    j["round_index"] = v.state.round_index;
    j["current_prompt"] = v.state.current_prompt;
    j["current_image"] = v.state.current_image ? nlohmann::ordered_json(*v.state.current_image) : nullptr;
    j["predictor_enabled"] = v.predictor_enabled;
    j["scenario"] = v.scenario;
    auto history = nlohmann::ordered_json::array();
    for (const auto& r : v.state.history) history.push_back(record_json(r));
    j["history"] = std::move(history);
    return j;
}

/// Session orchestration behind the HTTP API: edge previews with predicted
/// strengths, cloud refinement with upload accounting, an append-only event
/// log replayed on startup, and per-session request serialization.
class Orchestrator {
public:
    Orchestrator(ServiceConfig config, std::shared_ptr<GenerationBackend> edge,
                 std::shared_ptr<GenerationBackend> cloud, Predictors predictors, FeatureEncoders encoders = {})
        : config_(checked(std::move(config), predictors)),
          edge_(std::move(edge)),
          cloud_(std::move(cloud)),
          predictors_(std::move(predictors)),
          encoders_(std::move(encoders)),
          images_(config_.persistence_path / "images") {
        replay_log();
        log_ = std::make_unique<EventLog>(log_path());
    }

    /// Builds backends and predictors from the selectors and weight paths in the config.
    static std::unique_ptr<Orchestrator> from_config(const ServiceConfig& config) {
        config.validate();
        auto make_backend = [&](const std::string& selector, Provenance provenance) -> std::shared_ptr<GenerationBackend> {
            if (selector == "mock") {
                MockBackendConfig mc;
                mc.provenance = provenance;
                return std::make_shared<MockBackend>(mc);
            }
            if (selector.rfind("http://", 0) == 0 || selector.rfind("https://", 0) == 0) {
                return std::make_shared<RemoteBackend>(
                    RemoteEndpoint{selector, std::chrono::milliseconds(config.remote_timeout_ms)});
            }
            raise(ErrorCode::ConfigError, "backend selector must be 'mock' or an http URL, got '" + selector + "'");
        };
        if (config.predictor_enabled && (!config.edge_weights || !config.cloud_weights)) {
            raise(ErrorCode::ConfigError, "predictor_enabled requires edge_weights and cloud_weights");
        }
        FeatureEncoders encoders;
        Predictors predictors;
        try {
            if (config.edge_weights) predictors.edge = load_weights(*config.edge_weights, encoders.edge_layers());
            if (config.cloud_weights) predictors.cloud = load_weights(*config.cloud_weights, encoders.cloud_layers());
        } catch (const Error& e) {
            raise(ErrorCode::ConfigError, std::string("cannot load predictor weights: ") + e.what());
        }
        return std::make_unique<Orchestrator>(config, make_backend(config.edge_backend, Provenance::MockEdge),
                                              make_backend(config.cloud_backend, Provenance::MockCloud),
                                              std::move(predictors), std::move(encoders));
    }

    /// `predictor` overrides the configured default for this session.
    std::string create_session(std::optional<bool> predictor = std::nullopt) {
        const bool use_predictor = predictor.value_or(config_.predictor_enabled);
        if (use_predictor && !has_predictors()) {
            raise(ErrorCode::ConfigError, "predictor requested but no predictor weights are loaded");
        }
        std::unique_lock lock(sessions_mutex_);
        std::string id;
        do {
            id = make_id(created_++);
        } while (sessions_.count(id));
        log_->append(id, "create", {{"predictor_enabled", use_predictor}});
        sessions_[id] = make_slot(id, use_predictor);
        return id;
    }

    RoundRecord submit_prompt(const std::string& id, const std::string& prompt) {
        auto slot = find(id);
        Turn turn(*slot);
        const SessionState before = snapshot(*slot).state;
        if (prompt.find_first_not_of(" \t\r\n") == std::string::npos) {
            raise(ErrorCode::EmptyText, "prompt must contain text");
        }
        const SessionState probe = transition(before, SessionEvent::submit(prompt));
        RoundRecord rec;
        rec.round_index = probe.round_index;
        rec.prompt = prompt;
        rec.tier = Tier::Edge;
        const std::uint64_t seed = generation_seed(id, rec.round_index);

        GeneratedImage image = [&] {
            if (before.phase == Phase::Created) {
                rec.steps_executed = config_.base_steps_edge;
                const auto t0 = Clock::now();
                auto img = edge_->txt2img(prompt, config_.base_steps_edge, seed);
                rec.latency = assemble_round(0.0, generate_time(rec.steps_executed, config_.edge_cost, t0), 0.0);
                return img;
            }
            const GeneratedImage prev = images_.get(*before.current_image);
            const auto t0 = Clock::now();
            Strength s = clip_strength(config_.fixed_strength.value, grid_);
            double predict_s = 0.0;
            if (slot->predictor_enabled) {
                s = predict_edge_strength(*predictors_.edge, encoders_.edge_text.embed_text(before.current_prompt),
                                          encoders_.edge_text.embed_text(prompt), grid_);
                ++predictor_calls_;
                predict_s = config_.simulate_latency ? config_.predict_edge_s : seconds_since(t0);
            }
            const DenoisePlan plan = plan_for_strength(s, config_.base_steps_edge, config_.t_max);
            rec.predicted_strength = s;
            rec.steps_executed = plan.steps;
            const auto t1 = Clock::now();
            auto img = edge_->img2img(prev, prompt, plan, seed);
            rec.latency = assemble_round(predict_s, generate_time(plan.steps, config_.edge_cost, t1), 0.0);
            return img;
        }();
        rec.image_ref = images_.put(image);

        log_->append(id, "submit", record_json(rec));
        commit(*slot, SessionEvent::submit(prompt, rec.image_ref), rec);
        return rec;
    }

    RoundRecord finalize(const std::string& id) {
        auto slot = find(id);
        Turn turn(*slot);
        const SessionState before = snapshot(*slot).state;
        const SessionState refining = transition(before, SessionEvent::finalize());
        set_state(*slot, refining);
        try {
            const GeneratedImage draft = images_.get(*before.current_image);
            RoundRecord rec;
            rec.round_index = before.round_index;
            rec.prompt = before.current_prompt;
            rec.tier = Tier::Cloud;
            const double transmit = transmission_latency(draft.payload_bytes(), config_.network.uplink_bps);

            const auto t0 = Clock::now();
            Strength s = clip_strength(config_.fixed_strength.value, grid_);
            double predict_s = 0.0;
            if (slot->predictor_enabled) {
                s = predict_cloud_strength(*predictors_.cloud, encoders_.cloud_text.embed_text(before.current_prompt),
                                           encoders_.image.embed_image(draft), grid_);
                ++predictor_calls_;
                predict_s = config_.simulate_latency ? config_.predict_cloud_s : seconds_since(t0);
            }
            const DenoisePlan plan = plan_for_strength(s, config_.base_steps_cloud, config_.t_max);
            rec.predicted_strength = s;
            rec.steps_executed = plan.steps;
            const auto t1 = Clock::now();
            const auto refined =
                cloud_->img2img(draft, before.current_prompt, plan, generation_seed(id, before.round_index + 1));
            rec.latency = assemble_round(predict_s, generate_time(plan.steps, config_.cloud_cost, t1), transmit);
            rec.image_ref = images_.put(refined);

            log_->append(id, "finalize", record_json(rec));
            commit(*slot, SessionEvent::cloud_done(rec.image_ref), rec);
            return rec;
        } catch (...) {
            set_state(*slot, before);
            throw;
        }
    }

    void close(const std::string& id) {
        auto slot = find(id);
        Turn turn(*slot);
        (void)transition(snapshot(*slot).state, SessionEvent::close());
        log_->append(id, "close", nullptr);
        std::lock_guard lock(slot->state_mutex);
        slot->state = transition(slot->state, SessionEvent::close());
    }

    SessionView get_session(const std::string& id) const { return snapshot(*find(id)); }

    std::vector<std::string> session_ids() const {
        std::shared_lock lock(sessions_mutex_);
        std::vector<std::string> ids;
        for (const auto& [id, _] : sessions_) ids.push_back(id);
        return ids;
    }

    /// One row per scenario tag over sessions that completed cloud refinement.
    MetricsReport metrics() const {
        std::vector<SessionSummary> summaries;
        std::shared_lock lock(sessions_mutex_);
        for (const auto& [id, slot] : sessions_) {
            const auto view = snapshot(*slot);
            for (auto it = view.state.history.rbegin(); it != view.state.history.rend(); ++it) {
                if (it->tier != Tier::Cloud) continue;
                summaries.push_back({view.scenario, it->latency.transmit_s, it->latency.total_s,
                                     static_cast<double>(it->steps_executed)});
                break;
            }
        }
        return aggregate(summaries);
    }

    const ImageStore& images() const noexcept { return images_; }
    const ServiceConfig& config() const noexcept { return config_; }
    std::uint64_t predictor_calls() const noexcept { return predictor_calls_.load(); }
    bool has_predictors() const noexcept { return predictors_.edge && predictors_.cloud; }
    std::filesystem::path log_path() const { return config_.persistence_path / "events.jsonl"; }

private:
    static ServiceConfig checked(ServiceConfig config, const Predictors& predictors) {
        config.validate();
        if (config.predictor_enabled && !(predictors.edge && predictors.cloud)) {
            raise(ErrorCode::ConfigError, "predictor_enabled requires loaded edge and cloud predictors");
        }
        return config;
    }

    using Clock = std::chrono::steady_clock;

    struct Slot {
        std::string id;
        bool predictor_enabled = false;
        // ticket lock: mutations run one at a time in arrival order
        std::mutex turn_mutex;
        std::condition_variable turn_cv;
        std::uint64_t next_ticket = 0;
        std::uint64_t serving = 0;
        mutable std::mutex state_mutex;
        SessionState state;
    };

    class Turn {
    public:
        explicit Turn(Slot& slot) : slot_(slot) {
            std::unique_lock lock(slot_.turn_mutex);
            const std::uint64_t ticket = slot_.next_ticket++;
            slot_.turn_cv.wait(lock, [&] { return slot_.serving == ticket; });
        }
        ~Turn() {
            {
                std::lock_guard lock(slot_.turn_mutex);
                ++slot_.serving;
            }
            slot_.turn_cv.notify_all();
        }
        Turn(const Turn&) = delete;
        Turn& operator=(const Turn&) = delete;

    private:
        Slot& slot_;
    };

    std::shared_ptr<Slot> make_slot(const std::string& id, bool predictor) const {
        auto slot = std::make_shared<Slot>();
        slot->id = id;
        slot->predictor_enabled = predictor;
        slot->state.session_id = id;
        return slot;
    }

    std::string make_id(std::uint64_t n) const {
        static constexpr char kHex[] = "0123456789abcdef";
        std::uint64_t h = mix64(config_.seed * 0x9e3779b97f4a7c15ULL + n);
        std::string id = "s";
        for (int i = 0; i < 12; ++i, h >>= 4) id.push_back(kHex[h & 0xf]);
        return id;
    }

    std::uint64_t generation_seed(const std::string& id, int round) const {
        return mix64(seeded_hash(id, config_.seed) + static_cast<std::uint64_t>(round));
    }

    static double seconds_since(Clock::time_point t0) {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    }

    double generate_time(int steps, const BackendCostModel& cost, Clock::time_point t0) const {
        return config_.simulate_latency ? simulate_generation_time(steps, cost) : seconds_since(t0);
    }

    std::shared_ptr<Slot> find(const std::string& id) const {
        std::shared_lock lock(sessions_mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) raise(ErrorCode::UnknownSession, "no session '" + id + "'");
        return it->second;
    }

    SessionView snapshot(const Slot& slot) const {
        std::lock_guard lock(slot.state_mutex);
        return {slot.state, slot.predictor_enabled, scenario_tag(Scenario::EdgeCloud, slot.predictor_enabled)};
    }

    static void set_state(Slot& slot, const SessionState& state) {
        std::lock_guard lock(slot.state_mutex);
        slot.state = state;
    }

    static void commit(Slot& slot, const SessionEvent& event, const RoundRecord& rec) {
        std::lock_guard lock(slot.state_mutex);
        slot.state = transition(slot.state, event);
        slot.state.history.push_back(rec);
    }

    void replay_log() {
        for (const auto& entry : EventLog::read(log_path())) {
            if (entry.event == "create") {
                const bool predictor = entry.record.is_object() && entry.record.value("predictor_enabled", false);
                sessions_[entry.session] = make_slot(entry.session, predictor);
                ++created_;
                continue;
            }
            auto it = sessions_.find(entry.session);
            if (it == sessions_.end()) {
                raise(ErrorCode::ParseError, "event log refers to unknown session '" + entry.session + "'");
            }
            Slot& slot = *it->second;
            if (entry.event == "submit") {
                const auto rec = record_from_json(entry.record);
                commit(slot, SessionEvent::submit(rec.prompt, rec.image_ref), rec);
            } else if (entry.event == "finalize") {
                const auto rec = record_from_json(entry.record);
                slot.state = transition(slot.state, SessionEvent::finalize());
                commit(slot, SessionEvent::cloud_done(rec.image_ref), rec);
            } else if (entry.event == "close") {
                slot.state = transition(slot.state, SessionEvent::close());
            } else {
                raise(ErrorCode::ParseError, "unknown event '" + entry.event + "' in log");
            }
        }
    }

    ServiceConfig config_;
    CandidateSet grid_ = CandidateSet::standard();
    std::shared_ptr<GenerationBackend> edge_;
    std::shared_ptr<GenerationBackend> cloud_;
    Predictors predictors_;
    FeatureEncoders encoders_;
    ImageStore images_;
    std::unique_ptr<EventLog> log_;
    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    std::uint64_t created_ = 0;
    std::atomic<std::uint64_t> predictor_calls_{0};
};

}  // namespace diffx
