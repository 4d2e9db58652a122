// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "diffx/error.hpp"

namespace diffx {

/// Noise-level fraction for img2img. Values handed out by the library are
/// always clipped into the candidate range.
struct Strength {
    double value = 0.0;

    friend bool operator==(const Strength&, const Strength&) = default;
    friend auto operator<=>(const Strength&, const Strength&) = default;
};

/// Ordered grid of admissible strengths, used for labeling and as the clip range.
class CandidateSet {
public:
    /// {0.40, 0.45, ..., 0.90}
    static CandidateSet standard() {
        std::vector<Strength> values;
        values.reserve(11);
        for (int i = 0; i <= 10; ++i) {
            // integer lattice avoids accumulating 0.05 steps
            values.push_back(Strength{(40 + 5 * i) / 100.0});
        }
        return CandidateSet(std::move(values));
    }

    explicit CandidateSet(std::vector<Strength> values) : values_(std::move(values)) {
        if (values_.empty()) {
            raise(ErrorCode::InvalidArgument, "candidate set must not be empty");
        }
        for (std::size_t i = 1; i < values_.size(); ++i) {
            if (!(values_[i - 1].value < values_[i].value)) {
                raise(ErrorCode::InvalidArgument, "candidate set must be strictly ascending");
            }
        }
    }

    const std::vector<Strength>& values() const& noexcept { return values_; }
    std::vector<Strength> values() && { return std::move(values_); }
    std::size_t size() const noexcept { return values_.size(); }
    Strength min() const noexcept { return values_.front(); }
    Strength max() const noexcept { return values_.back(); }

    bool contains(Strength s) const noexcept {
        return std::find(values_.begin(), values_.end(), s) != values_.end();
    }

private:
    std::vector<Strength> values_;
};

/// Clips to the continuous range [grid.min, grid.max]; no snapping to grid points.
inline Strength clip_strength(double raw, const CandidateSet& grid) {
    if (std::isnan(raw)) {
        raise(ErrorCode::NonFinite, "strength is NaN");
    }
    return Strength{std::min(std::max(raw, grid.min().value), grid.max().value)};
}

enum class Tier { Edge, Cloud };

inline std::string_view to_string(Tier tier) { return tier == Tier::Edge ? "edge" : "cloud"; }

inline Tier tier_from_string(std::string_view s) {
    if (s == "edge") return Tier::Edge;
    if (s == "cloud") return Tier::Cloud;
    raise(ErrorCode::ParseError, "unknown tier '" + std::string(s) + "'");
}

struct LatencyBreakdown {
    double predict_s = 0.0;
    double generate_s = 0.0;
    double transmit_s = 0.0;
    double total_s = 0.0;

    friend bool operator==(const LatencyBreakdown&, const LatencyBreakdown&) = default;
};

/// Builds a breakdown whose total is the sum of its components.
inline LatencyBreakdown assemble_round(double predict_s, double generate_s, double transmit_s) {
    for (double c : {predict_s, generate_s, transmit_s}) {
        if (!(c >= 0.0)) {
            raise(ErrorCode::NegativeComponent, "latency components must be >= 0");
        }
    }
    return LatencyBreakdown{predict_s, generate_s, transmit_s, predict_s + generate_s + transmit_s};
}

struct RoundRecord {
    int round_index = 0;
    std::string prompt;
    std::optional<Strength> predicted_strength;
    int steps_executed = 1;
    LatencyBreakdown latency;
    Tier tier = Tier::Edge;
    // content digest of the image produced by this round, empty when not stored
    std::string image_ref;

    friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

enum class Phase { Created, PreviewReady, CloudRefining, Refined, Closed };

inline std::string_view to_string(Phase phase) {
    switch (phase) {
    case Phase::Created: return "Created";
    case Phase::PreviewReady: return "PreviewReady";
    case Phase::CloudRefining: return "CloudRefining";
    case Phase::Refined: return "Refined";
    case Phase::Closed: return "Closed";
    }
    return "?";
}

inline Phase phase_from_string(std::string_view s) {
    for (Phase p : {Phase::Created, Phase::PreviewReady, Phase::CloudRefining, Phase::Refined,
                    Phase::Closed}) {
        if (to_string(p) == s) return p;
    }
    raise(ErrorCode::ParseError, "unknown phase '" + std::string(s) + "'");
}

enum class EventKind { SubmitPrompt, Finalize, CloudDone, Close };

inline std::string_view to_string(EventKind kind) {
    switch (kind) {
    case EventKind::SubmitPrompt: return "SubmitPrompt";
    case EventKind::Finalize: return "Finalize";
    case EventKind::CloudDone: return "CloudDone";
    case EventKind::Close: return "Close";
    }
    return "?";
}

struct SessionEvent {
    EventKind kind;
    std::string prompt;  // SubmitPrompt only
    // reference to the image the event produced (preview or refined result)
    std::string image_ref;

    static SessionEvent submit(std::string prompt, std::string image_ref = {}) {
        return {EventKind::SubmitPrompt, std::move(prompt), std::move(image_ref)};
    }
    static SessionEvent finalize() { return {EventKind::Finalize, {}, {}}; }
    static SessionEvent cloud_done(std::string image_ref = {}) {
        return {EventKind::CloudDone, {}, std::move(image_ref)};
    }
    static SessionEvent close() { return {EventKind::Close, {}, {}}; }
};

struct SessionState {
    std::string session_id;
    Phase phase = Phase::Created;
    int round_index = 0;
    std::string current_prompt;
    std::optional<std::string> current_image;
    std::vector<RoundRecord> history;

    friend bool operator==(const SessionState&, const SessionState&) = default;
};

/// Pure state-machine step. History is not touched here; callers append
/// RoundRecords alongside the transition.
inline SessionState transition(const SessionState& state, const SessionEvent& event) {
    auto illegal = [&]() -> SessionState {
        raise(ErrorCode::IllegalTransition,
              std::string(to_string(event.kind)) + " not allowed in phase " +
                  std::string(to_string(state.phase)));
    };

    SessionState next = state;
    switch (event.kind) {
    case EventKind::SubmitPrompt:
        if (state.phase != Phase::Created && state.phase != Phase::PreviewReady) return illegal();
        if (event.prompt.empty()) {
            raise(ErrorCode::InvalidArgument, "SubmitPrompt requires a prompt");
        }
        next.phase = Phase::PreviewReady;
        next.round_index = state.round_index + 1;
        next.current_prompt = event.prompt;
        next.current_image = event.image_ref;
        return next;
    case EventKind::Finalize:
        if (state.phase != Phase::PreviewReady) return illegal();
        next.phase = Phase::CloudRefining;
        return next;
    case EventKind::CloudDone:
        if (state.phase != Phase::CloudRefining) return illegal();
        next.phase = Phase::Refined;
        if (!event.image_ref.empty()) next.current_image = event.image_ref;
        return next;
    case EventKind::Close:
        next.phase = Phase::Closed;
        return next;
    }
    return illegal();
}

}  // namespace diffx
