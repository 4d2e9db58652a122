// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "diffx/backend.hpp"
#include "diffx/core.hpp"
#include "diffx/scheduler.hpp"

namespace diffx {

struct LabeledPair {
    std::string id;
    std::string prompt_prev;
    std::string prompt_curr;
    Strength s_star;
    std::vector<std::pair<Strength, double>> score_curve;
};

struct LabelingOptions {
    int base_steps = 25;
    int t_max = kDefaultTMax;
};

/// Exhaustive argmax of the alignment score over every candidate strength.
/// Ties resolve to the smallest strength. Backend errors abort the pair.
inline LabeledPair label_strength(const GeneratedImage& image_prev, std::string_view prompt_curr,
                                  const CandidateSet& grid, GenerationBackend& backend,
                                  const AlignmentScorer& scorer, std::uint64_t seed,
                                  const LabelingOptions& options = {}) {
    LabeledPair pair;
    pair.prompt_curr = std::string(prompt_curr);
    pair.score_curve.reserve(grid.size());
    double best = 0.0;
    for (const Strength s : grid.values()) {
        GeneratedImage out = [&] {
            try {
                return backend.img2img(image_prev, prompt_curr, plan_for_strength(s, options.base_steps, options.t_max),
                                       seed);
            } catch (const Error& e) {
                raise(ErrorCode::BackendFailure, std::string("img2img failed while labeling: ") + e.what());
            }
        }();
        const double score = scorer.score(out, prompt_curr);
        if (pair.score_curve.empty() || score > best) {
            best = score;
            pair.s_star = s;
        }
        pair.score_curve.emplace_back(s, score);
    }
    return pair;
}

struct PromptPair {
    std::string id;
    std::string prompt_prev;
    std::string prompt_curr;
};

inline PromptPair parse_prompt_pair(const std::string& line, std::size_t line_no) {
    try {
        const auto j = nlohmann::json::parse(line);
        PromptPair p{j.at("id").get<std::string>(), j.at("prompt_prev").get<std::string>(),
                     j.at("prompt_curr").get<std::string>()};
        if (p.prompt_prev.empty() || p.prompt_curr.empty()) {
            raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": empty prompt");
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
    }
}

inline std::string label_to_jsonl(const LabeledPair& pair) {
    nlohmann::ordered_json j;
    j["id"] = pair.id;
    j["s_star"] = pair.s_star.value;
    auto curve = nlohmann::ordered_json::array();
    for (const auto& [s, score] : pair.score_curve) curve.push_back({s.value, score});
    j["curve"] = std::move(curve);
    j["prompt_prev"] = pair.prompt_prev;
    j["prompt_curr"] = pair.prompt_curr;
    return j.dump();
}

inline LabeledPair label_from_json(const nlohmann::json& j) {
    LabeledPair p;
    p.id = j.at("id").get<std::string>();
    p.s_star = Strength{j.at("s_star").get<double>()};
    for (const auto& point : j.at("curve")) {
        p.score_curve.emplace_back(Strength{point.at(0).get<double>()}, point.at(1).get<double>());
    }
    if (j.contains("prompt_prev")) p.prompt_prev = j["prompt_prev"].get<std::string>();
    if (j.contains("prompt_curr")) p.prompt_curr = j["prompt_curr"].get<std::string>();
    return p;
}

inline std::vector<LabeledPair> read_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<LabeledPair> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(label_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            raise(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

struct BuildLabelsOptions {
    LabelingOptions labeling;
    // continue after the last complete record of an existing output file
    bool resume = false;
};

/// Labels every pair of a JSON Lines pairs file, appending one record per
/// pair in input order. Records are flushed as they complete, so a failure
/// leaves a valid prefix. Returns the number of records written by this call.
inline std::size_t build_label_dataset(const std::filesystem::path& pairs_path,
                                       const std::filesystem::path& out_path, const CandidateSet& grid,
                                       GenerationBackend& backend, const AlignmentScorer& scorer,
                                       std::uint64_t seed, const BuildLabelsOptions& options = {}) {
    std::ifstream in(pairs_path);
    if (!in) raise(ErrorCode::IoError, "cannot open " + pairs_path.string());

    std::size_t done = 0;
    if (options.resume && std::filesystem::exists(out_path)) {
        // keep only complete lines; a torn last line is dropped and redone
        std::ifstream prev(out_path);
        std::string kept;
        std::string line;
        while (std::getline(prev, line)) {
            if (prev.eof() || !nlohmann::json::accept(line)) break;
            kept += line + "\n";
            ++done;
        }
        prev.close();
        std::ofstream rewrite(out_path, std::ios::trunc);
        rewrite << kept;
    }
    std::ofstream out(out_path, options.resume ? std::ios::app : std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, "cannot write " + out_path.string());

    std::string line;
    std::size_t line_no = 0;
    std::size_t index = 0;
    std::size_t written = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const PromptPair pair = parse_prompt_pair(line, line_no);
        if (index++ < done) continue;
        GeneratedImage prev = [&] {
            try {
                return backend.txt2img(pair.prompt_prev, options.labeling.base_steps, seed);
            } catch (const Error& e) {
                raise(ErrorCode::BackendFailure, std::string("txt2img failed while labeling: ") + e.what());
            }
        }();
        LabeledPair labeled = label_strength(prev, pair.prompt_curr, grid, backend, scorer, seed, options.labeling);
        labeled.id = pair.id;
        labeled.prompt_prev = pair.prompt_prev;
        out << label_to_jsonl(labeled) << '\n';
        out.flush();
        ++written;
    }
    return written;
}

}  // namespace diffx
