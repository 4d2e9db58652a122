// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "diffx/core.hpp"

namespace diffx {

inline constexpr int kDefaultTMax = 999;

struct DenoisePlan {
    Strength strength;
    int steps = 1;
    std::vector<int> timesteps;  // strictly decreasing, starts at t_start
    int t_start = 0;

    friend bool operator==(const DenoisePlan&, const DenoisePlan&) = default;
};

/// Round half up; the 1e-9 slack absorbs representation error such as 0.9 * 25.
inline long round_half_up(double x) { return static_cast<long>(std::floor(x + 0.5 + 1e-9)); }

inline int steps_for_strength(Strength s, int base_steps) {
    if (base_steps < 1) raise(ErrorCode::InvalidArgument, "base_steps must be >= 1");
    return static_cast<int>(std::max(1L, round_half_up(s.value * base_steps)));
}

/// Uniform skip-step subsequence from round(s * t_max) down to 0.
/// A one-step plan is [t_start]; its single step denoises straight to zero.
inline DenoisePlan skip_schedule(Strength s, int steps, int t_max = kDefaultTMax) {
    if (steps < 1) raise(ErrorCode::InvalidArgument, "steps must be >= 1");
    if (t_max < 0) raise(ErrorCode::InvalidArgument, "t_max must be >= 0");
    const long t_start = round_half_up(s.value * t_max);
    if (steps > t_start + 1) {
        raise(ErrorCode::InfeasibleSchedule, "steps " + std::to_string(steps) + " exceed available levels " +
                                                 std::to_string(t_start + 1));
    }
    DenoisePlan plan{s, steps, {}, static_cast<int>(t_start)};
    plan.timesteps.reserve(static_cast<std::size_t>(steps));
    if (steps == 1) {
        plan.timesteps.push_back(plan.t_start);
        return plan;
    }
    const long gaps = steps - 1;
    for (long i = 0; i < steps; ++i) {
        // t_start * (gaps - i) / gaps rounded half up, in exact integer arithmetic
        const long num = 2 * t_start * (gaps - i) + gaps;
        plan.timesteps.push_back(static_cast<int>(num / (2 * gaps)));
    }
    return plan;
}

/// Plan for an img2img call: step count from the strength, uniform spacing.
inline DenoisePlan plan_for_strength(Strength s, int base_steps, int t_max = kDefaultTMax) {
    return skip_schedule(s, steps_for_strength(s, base_steps), t_max);
}

}  // namespace diffx
