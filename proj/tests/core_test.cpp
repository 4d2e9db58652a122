// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "diffx/core.hpp"
#include "diffx/hashing.hpp"

using namespace diffx;

TEST(CandidateSet, StandardGridHasElevenAscendingValues) {
    const auto grid = CandidateSet::standard();
    ASSERT_EQ(grid.size(), 11u);
    EXPECT_DOUBLE_EQ(grid.min().value, 0.40);
    EXPECT_DOUBLE_EQ(grid.max().value, 0.90);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_NEAR(grid.values()[i].value, 0.40 + 0.05 * static_cast<double>(i), 1e-12);
        if (i > 0) EXPECT_LT(grid.values()[i - 1].value, grid.values()[i].value);
    }
}

TEST(CandidateSet, RejectsEmptyAndUnordered) {
    EXPECT_THROW(CandidateSet({}), Error);
    EXPECT_THROW(CandidateSet({Strength{0.5}, Strength{0.5}}), Error);
    EXPECT_THROW(CandidateSet({Strength{0.6}, Strength{0.5}}), Error);
}

TEST(ClipStrength, Examples) {
    const auto grid = CandidateSet::standard();
    EXPECT_DOUBLE_EQ(clip_strength(1.30, grid).value, 0.90);
    EXPECT_DOUBLE_EQ(clip_strength(0.10, grid).value, 0.40);
    EXPECT_DOUBLE_EQ(clip_strength(0.47, grid).value, 0.47);
}

TEST(ClipStrength, NaNIsAnError) {
    try {
        clip_strength(std::numeric_limits<double>::quiet_NaN(), CandidateSet::standard());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonFinite);
    }
}

TEST(ClipStrength, IdempotentAndInRange) {
    const auto grid = CandidateSet::standard();
    Rng rng(11);
    for (int i = 0; i < 10000; ++i) {
        const double x = rng.uniform(-5.0, 5.0);
        const Strength once = clip_strength(x, grid);
        EXPECT_EQ(clip_strength(once.value, grid), once);
        EXPECT_GE(once.value, 0.40);
        EXPECT_LE(once.value, 0.90);
    }
    EXPECT_DOUBLE_EQ(clip_strength(std::numeric_limits<double>::infinity(), grid).value, 0.90);
}

TEST(LatencyBreakdown, SumIdentity) {
    const auto b = assemble_round(0.01, 11.71, 0.20);
    EXPECT_NEAR(b.total_s, 11.92, 1e-9);
    EXPECT_EQ(assemble_round(0, 0, 0).total_s, 0.0);
    EXPECT_THROW(assemble_round(-0.1, 1, 1), Error);
    EXPECT_THROW(assemble_round(0, 1, -1e-12), Error);
}

TEST(Transition, Examples) {
    SessionState s;
    const auto next = transition(s, SessionEvent::submit("a cat"));
    EXPECT_EQ(next.phase, Phase::PreviewReady);
    EXPECT_EQ(next.round_index, 1);
    EXPECT_EQ(next.current_prompt, "a cat");

    try {
        transition(s, SessionEvent::finalize());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IllegalTransition);
    }

    SessionState third;
    third.phase = Phase::PreviewReady;
    third.round_index = 3;
    third.current_image = "img";
    const auto refining = transition(third, SessionEvent::finalize());
    EXPECT_EQ(refining.phase, Phase::CloudRefining);
    EXPECT_EQ(refining.round_index, 3);
}

TEST(Transition, SubmitDuringCloudRefiningIsIllegal) {
    SessionState s;
    s.phase = Phase::CloudRefining;
    EXPECT_THROW(transition(s, SessionEvent::submit("a dog")), Error);
    EXPECT_EQ(transition(s, SessionEvent::cloud_done()).phase, Phase::Refined);
}

TEST(Transition, CloseFromAnyPhase) {
    for (Phase p : {Phase::Created, Phase::PreviewReady, Phase::CloudRefining, Phase::Refined, Phase::Closed}) {
        SessionState s;
        s.phase = p;
        EXPECT_EQ(transition(s, SessionEvent::close()).phase, Phase::Closed);
    }
}

namespace {

// Independent table of the legal moves.
bool legal(Phase from, EventKind ev) {
    switch (ev) {
    case EventKind::SubmitPrompt: return from == Phase::Created || from == Phase::PreviewReady;
    case EventKind::Finalize: return from == Phase::PreviewReady;
    case EventKind::CloudDone: return from == Phase::CloudRefining;
    case EventKind::Close: return true;
    }
    return false;
}

}  // namespace

TEST(Transition, RandomEventSequencesProperty) {
    Rng rng(2026);
    for (int seq = 0; seq < 1000; ++seq) {
        SessionState state;
        int accepted_submits = 0;
        int finalizes = 0;
        const int length = 1 + static_cast<int>(rng.below(20));
        for (int i = 0; i < length; ++i) {
            const auto kind = static_cast<EventKind>(rng.below(4));
            SessionEvent ev = kind == EventKind::SubmitPrompt ? SessionEvent::submit("p" + std::to_string(i), "img")
                                                              : SessionEvent{kind, {}, {}};
            const Phase before = state.phase;
            if (legal(before, kind)) {
                state = transition(state, ev);
                if (kind == EventKind::SubmitPrompt) ++accepted_submits;
                if (kind == EventKind::Finalize) ++finalizes;
                if (state.phase == Phase::Refined) EXPECT_EQ(finalizes, 1);
            } else {
                EXPECT_THROW(state = transition(state, ev), Error);
                EXPECT_EQ(state.phase, before);
            }
            EXPECT_EQ(state.round_index, accepted_submits);
            if (state.phase != Phase::Created && state.phase != Phase::Closed) {
                EXPECT_TRUE(state.current_image.has_value());
            }
            if (state.phase == Phase::Created) EXPECT_FALSE(state.current_image.has_value());
        }
    }
}
