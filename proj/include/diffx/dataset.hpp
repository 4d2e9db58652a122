// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "diffx/hashing.hpp"
#include "diffx/labeling.hpp"

namespace diffx {

/// One simulated user: successive prompts, the last one being the confirmed prompt.
struct InteractiveSession {
    std::string id;
    std::vector<std::string> rounds;

    friend bool operator==(const InteractiveSession&, const InteractiveSession&) = default;
};

namespace vocab {

inline constexpr std::array<std::string_view, 24> kSubjects = {
    "cat", "dog", "horse", "red bus", "old man", "young woman", "bicycle", "sailboat",
    "teddy bear", "giraffe", "pizza", "clock tower", "kitchen", "train", "laptop", "surfer",
    "elephant", "bowl of fruit", "zebra", "fire hydrant", "motorcycle", "skier", "umbrella", "airplane"};
inline constexpr std::array<std::string_view, 14> kAdjectives = {
    "small", "large", "brown", "white", "black", "striped", "vintage", "shiny",
    "wooden", "fluffy", "rusty", "colorful", "sleepy", "tall"};
inline constexpr std::array<std::string_view, 14> kSettings = {
    "on a beach", "in a park", "on a city street", "in a kitchen", "under a bridge", "in the snow",
    "at night", "near a lake", "in a forest", "on a table", "in a desert", "by the harbor",
    "on a mountain trail", "inside a train station"};
inline constexpr std::array<std::string_view, 16> kDetails = {
    "wearing a hat", "with a red scarf", "next to a bench", "surrounded by flowers",
    "holding an umbrella", "with people walking by", "beside a blue car", "under a tree",
    "with birds overhead", "near a wooden fence", "with autumn leaves", "beside a lamp post",
    "with a kite in the sky", "next to a stack of books", "with puddles on the ground", "under string lights"};
inline constexpr std::array<std::string_view, 16> kStyles = {
    "in watercolor style", "photorealistic", "at sunset", "with dramatic lighting", "in the rain",
    "highly detailed", "cinematic", "pastel tones", "oil painting", "wide angle", "close up",
    "black and white", "studio lighting", "soft focus", "golden hour", "film grain"};

}  // namespace vocab

namespace detail {

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& pool) {
    return pool[static_cast<std::size_t>(rng.below(N))];
}

/// k distinct entries of `pool`, in draw order.
template <std::size_t N>
std::vector<std::string_view> sample(Rng& rng, const std::array<std::string_view, N>& pool, std::size_t k) {
    std::array<std::size_t, N> idx{};
    for (std::size_t i = 0; i < N; ++i) idx[i] = i;
    std::vector<std::string_view> out;
    for (std::size_t i = 0; i < std::min(k, N); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(N - i));
        std::swap(idx[i], idx[j]);
        out.push_back(pool[idx[i]]);
    }
    return out;
}

inline std::string caption(Rng& rng) {
    std::string s = "a ";
    if (rng.uniform() < 0.5) (s += pick(rng, vocab::kAdjectives)) += ' ';
    s += pick(rng, vocab::kSubjects);
    (s += ' ') += pick(rng, vocab::kSettings);
    return s;
}

inline void append_all(std::string& s, const std::vector<std::string_view>& parts) {
    for (auto p : parts) (s += ' ') += p;
}

}  // namespace detail

/// Progressive sessions: subject, then setting, then details and styles.
/// Every round strictly extends the previous round's text.
inline std::vector<InteractiveSession> gen_dataset(int n_sessions, int rounds_per_session, std::uint64_t seed) {
    if (n_sessions < 1) raise(ErrorCode::InvalidArgument, "n_sessions must be >= 1");
    if (rounds_per_session < 1) raise(ErrorCode::InvalidArgument, "rounds_per_session must be >= 1");
    Rng rng(seed);
    std::vector<InteractiveSession> sessions;
    sessions.reserve(static_cast<std::size_t>(n_sessions));
    for (int i = 0; i < n_sessions; ++i) {
        InteractiveSession s;
        s.id = "s" + std::to_string(i);
        std::string prompt = "a ";
        if (rng.uniform() < 0.5) (prompt += detail::pick(rng, vocab::kAdjectives)) += ' ';
        prompt += detail::pick(rng, vocab::kSubjects);
        s.rounds.push_back(prompt);
        auto details = detail::sample(rng, vocab::kDetails, vocab::kDetails.size());
        auto styles = detail::sample(rng, vocab::kStyles, vocab::kStyles.size());
        std::size_t next_detail = 0;
        std::size_t next_style = 0;
        for (int r = 1; r < rounds_per_session; ++r) {
            if (r == 1) {
                (prompt += ' ') += detail::pick(rng, vocab::kSettings);
            } else {
                // one or two additions per round, alternating details and styles
                const int additions = 1 + static_cast<int>(rng.below(2));
                for (int a = 0; a < additions; ++a) {
                    const bool style = (r + a) % 2 == 0;
                    if (style) {
                        (prompt += ", ") += styles[next_style++ % styles.size()];
                    } else {
                        (prompt += ' ') += details[next_detail++ % details.size()];
                    }
                }
            }
            s.rounds.push_back(prompt);
        }
        sessions.push_back(std::move(s));
    }
    return sessions;
}

/// Prompt-edit pairs for labeling: a mix of attribute additions, subject
/// swaps, full rewrites and partial rewrites, so that the semantic distance
/// between the two prompts (and hence the labeled strength) spreads widely.
inline std::vector<PromptPair> gen_pairs(int n_pairs, std::uint64_t seed) {
    if (n_pairs < 0) raise(ErrorCode::InvalidArgument, "n_pairs must be >= 0");
    Rng rng(seed);
    std::vector<PromptPair> pairs;
    pairs.reserve(static_cast<std::size_t>(n_pairs));
    for (int i = 0; i < n_pairs; ++i) {
        std::string prev = detail::caption(rng);
        if (rng.uniform() < 0.5) detail::append_all(prev, detail::sample(rng, vocab::kStyles, rng.below(3)));
        std::string curr;
        const double kind = rng.uniform();
        if (kind < 0.2) {
            curr = prev;
            detail::append_all(curr, detail::sample(rng, vocab::kDetails, 1 + rng.below(2)));
            detail::append_all(curr, detail::sample(rng, vocab::kStyles, rng.below(3)));
        } else if (kind < 0.4) {
            // swap the subject, keep the rest
            curr = prev;
            std::string_view from;
            for (auto s : vocab::kSubjects) {
                if (curr.find(std::string(s)) != std::string::npos && s.size() > from.size()) from = s;
            }
            std::string_view to = detail::pick(rng, vocab::kSubjects);
            curr.replace(curr.find(std::string(from)), from.size(), to);
        } else if (kind < 0.7) {
            curr = detail::caption(rng);
            detail::append_all(curr, detail::sample(rng, vocab::kStyles, rng.below(4)));
        } else {
            // keep a prefix of the previous prompt, replace the tail
            const auto words = tokenize(prev);
            const std::size_t keep = 2 + static_cast<std::size_t>(rng.below(words.size() - 1));
            for (std::size_t w = 0; w < std::min(keep, words.size()); ++w) {
                if (!curr.empty()) curr += ' ';
                curr += words[w];
            }
            detail::append_all(curr, detail::sample(rng, vocab::kDetails, rng.below(2)));
            detail::append_all(curr, detail::sample(rng, vocab::kStyles, 1 + rng.below(4)));
        }
        pairs.push_back({"p" + std::to_string(i), std::move(prev), std::move(curr)});
    }
    return pairs;
}

/// Consecutive-round pairs of every session.
inline std::vector<PromptPair> session_pairs(const std::vector<InteractiveSession>& sessions) {
    std::vector<PromptPair> pairs;
    for (const auto& s : sessions) {
        for (std::size_t r = 1; r < s.rounds.size(); ++r) {
            pairs.push_back({s.id + "-r" + std::to_string(r), s.rounds[r - 1], s.rounds[r]});
        }
    }
    return pairs;
}

inline void write_sessions(const std::vector<InteractiveSession>& sessions, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
    for (const auto& s : sessions) {
        nlohmann::ordered_json j;
        j["id"] = s.id;
        j["rounds"] = s.rounds;
        out << j.dump() << '\n';
    }
}

inline std::vector<InteractiveSession> read_sessions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<InteractiveSession> sessions;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            InteractiveSession s{j.at("id").get<std::string>(), j.at("rounds").get<std::vector<std::string>>()};
            if (s.rounds.empty()) raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": no rounds");
            for (const auto& r : s.rounds) {
                if (r.find_first_not_of(" \t") == std::string::npos) {
                    raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": empty round");
                }
            }
            sessions.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return sessions;
}

inline void write_pairs(const std::vector<PromptPair>& pairs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
    for (const auto& p : pairs) {
        nlohmann::ordered_json j;
        j["id"] = p.id;
        j["prompt_prev"] = p.prompt_prev;
        j["prompt_curr"] = p.prompt_curr;
        out << j.dump() << '\n';
    }
}

}  // namespace diffx
