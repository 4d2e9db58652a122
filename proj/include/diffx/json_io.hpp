// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include "diffx/core.hpp"

namespace diffx {

inline nlohmann::ordered_json latency_json(const LatencyBreakdown& l) {
    return {{"predict_s", l.predict_s}, {"generate_s", l.generate_s}, {"transmit_s", l.transmit_s},
            {"total_s", l.total_s}};
}

inline nlohmann::ordered_json record_json(const RoundRecord& r) {
    nlohmann::ordered_json j;
    j["round_index"] = r.round_index;
    j["prompt"] = r.prompt;
    j["predicted_strength"] =
        r.predicted_strength ? nlohmann::ordered_json(r.predicted_strength->value) : nlohmann::ordered_json();
    j["steps_executed"] = r.steps_executed;
    j["latency"] = latency_json(r.latency);
    j["tier"] = std::string(to_string(r.tier));
    j["image_ref"] = r.image_ref;
    return j;
}

/// Inverse of record_json; malformed input raises ParseError.
template <class Json>
RoundRecord record_from_json(const Json& j) {
    try {
        RoundRecord r;
        r.round_index = j.at("round_index").template get<int>();
        r.prompt = j.at("prompt").template get<std::string>();
        if (!j.at("predicted_strength").is_null()) {
            r.predicted_strength = Strength{j["predicted_strength"].template get<double>()};
        }
        r.steps_executed = j.at("steps_executed").template get<int>();
        const auto& l = j.at("latency");
        r.latency = LatencyBreakdown{l.at("predict_s").template get<double>(), l.at("generate_s").template get<double>(),
                                     l.at("transmit_s").template get<double>(), l.at("total_s").template get<double>()};
        r.tier = tier_from_string(j.at("tier").template get<std::string>());
        r.image_ref = j.at("image_ref").template get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::ParseError, std::string("malformed round record: ") + e.what());
    }
}

}  // namespace diffx
