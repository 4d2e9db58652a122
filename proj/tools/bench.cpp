// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diffx/dataset.hpp"
#include "diffx/labeling.hpp"
#include "diffx/replay.hpp"
#include "diffx/training.hpp"
#include "diffx/weights_io.hpp"

namespace fs = std::filesystem;
using namespace diffx;

namespace {

/// Process exit status for a library error.
int exit_code(ErrorCode code) {
    switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::FormatVersionMismatch: return 2;
    case ErrorCode::BackendFailure:
    case ErrorCode::BackendUnavailable:
    case ErrorCode::ProtocolError:
    case ErrorCode::Timeout: return 3;
    case ErrorCode::ConfigError: return 4;
    default: return 1;
    }
}

void require_file(const fs::path& path) {
    if (!fs::is_regular_file(path)) raise(ErrorCode::IoError, "no such file: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out.flush()) raise(ErrorCode::IoError, "write failed: " + path.string());
}

MlpParams load_predictor(const fs::path& path, const std::vector<int>& layers) {
    require_file(path);
    try {
        return load_weights(path, layers);
    } catch (const Error& e) {
        raise(ErrorCode::ConfigError, "cannot load predictor weights: " + std::string(e.what()));
    }
}

struct GenDatasetArgs {
    int n = 400;
    int rounds = 3;
    std::uint64_t seed = 7;
    fs::path out;
};

struct GenPairsArgs {
    int n = 2000;
    std::uint64_t seed = 7;
    fs::path dataset;
    fs::path out;
};

struct LabelArgs {
    fs::path pairs;
    fs::path out;
    std::uint64_t seed = 7;
    bool resume = false;
    double beta = MockAlignmentScorer::kDefaultBeta;
    fs::path score_table;
    int base_steps = 25;
    int t_max = kDefaultTMax;
};

struct TrainArgs {
    fs::path labels;
    std::string tier = "edge";
    fs::path out;
    TrainingConfig training;
    double holdout = 0.0;
};

struct ReplayArgs {
    fs::path dataset;
    std::vector<std::string> scenarios;
    std::string predictor = "both";
    std::uint64_t seed = 7;
    fs::path report;
    fs::path log;
    fs::path edge_weights;
    fs::path cloud_weights;
    std::string baseline = "cloud-only";
    double fixed_strength = 0.90;
    double uplink_bps = NetworkConfig{}.uplink_bps;
    int base_steps_edge = 25;
    int base_steps_cloud = 25;
};

void run_gen_dataset(const GenDatasetArgs& a) {
    write_sessions(gen_dataset(a.n, a.rounds, a.seed), a.out);
    std::cout << "wrote " << a.n << " sessions to " << a.out.string() << '\n';
}

void run_gen_pairs(const GenPairsArgs& a) {
    std::vector<PromptPair> pairs;
    if (!a.dataset.empty()) {
        require_file(a.dataset);
        pairs = session_pairs(read_sessions(a.dataset));
    } else {
        pairs = gen_pairs(a.n, a.seed);
    }
    write_pairs(pairs, a.out);
    std::cout << "wrote " << pairs.size() << " pairs to " << a.out.string() << '\n';
}

void run_label(const LabelArgs& a) {
    require_file(a.pairs);
    if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
    MockBackend backend;
    std::unique_ptr<AlignmentScorer> scorer;
    if (a.score_table.empty()) {
        scorer = std::make_unique<MockAlignmentScorer>(ProviderConfig::hash(kImageDim, 3), a.beta);
    } else {
        require_file(a.score_table);
        scorer = std::make_unique<ScoreTableScorer>(a.score_table);
    }
    BuildLabelsOptions options;
    options.labeling.base_steps = a.base_steps;
    options.labeling.t_max = a.t_max;
    options.resume = a.resume;
    const auto written =
        build_label_dataset(a.pairs, a.out, CandidateSet::standard(), backend, *scorer, a.seed, options);
    std::cout << "labeled " << written << " pairs into " << a.out.string() << '\n';
}

void run_train(const TrainArgs& a) {
    require_file(a.labels);
    const Tier tier = a.tier == "edge" ? Tier::Edge : Tier::Cloud;
    const auto labels = read_labels(a.labels);
    if (labels.empty()) raise(ErrorCode::ParseError, a.labels.string() + ": no labels");

    FeatureEncoders encoders;
    MockBackend backend;
    const auto examples = examples_from_labels(labels, tier, encoders, backend, a.training.seed);
    const auto n_val = static_cast<std::size_t>(a.holdout * static_cast<double>(examples.size()));
    const std::span<const TrainingExample> all(examples);
    const auto fit = all.first(examples.size() - n_val);
    const auto val = all.last(n_val);

    auto params = init_mlp(tier == Tier::Edge ? encoders.edge_layers() : encoders.cloud_layers(), a.training.seed);
    const auto result = train(std::move(params), fit, a.training);
    if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
    save_weights(result.params, a.out);

    const auto grid = CandidateSet::standard();
    std::printf("tier %s: %zu examples, loss %.6f -> %.6f, fit MAE %.4f\n", a.tier.c_str(), fit.size(),
                result.initial_loss, result.loss_history.back(), clipped_mae(result.params, fit, grid));
    if (!val.empty()) std::printf("holdout MAE %.4f on %zu examples\n", clipped_mae(result.params, val, grid), val.size());
    std::cout << "wrote " << a.out.string() << '\n';
}

void run_replay(const ReplayArgs& a) {
    require_file(a.dataset);
    const auto sessions = read_sessions(a.dataset);

    std::vector<Scenario> scenarios;
    for (const auto& s : a.scenarios) scenarios.push_back(scenario_from_string(s));
    if (scenarios.empty()) scenarios = {Scenario::CloudOnly, Scenario::EdgeOnly, Scenario::EdgeCloud};

    std::vector<std::pair<Scenario, bool>> passes;
    for (Scenario s : scenarios) {
        if (s != Scenario::EdgeCloud) {
            passes.emplace_back(s, false);
            continue;
        }
        if (a.predictor != "off") passes.emplace_back(s, true);
        if (a.predictor != "on") passes.emplace_back(s, false);
    }

    ReplayConfig config;
    config.fixed_strength = Strength{a.fixed_strength};
    config.network.uplink_bps = a.uplink_bps;
    config.base_steps_edge = a.base_steps_edge;
    config.base_steps_cloud = a.base_steps_cloud;

    FeatureEncoders encoders;
    Predictors predictors;
    if (!a.edge_weights.empty()) predictors.edge = load_predictor(a.edge_weights, encoders.edge_layers());
    if (!a.cloud_weights.empty()) predictors.cloud = load_predictor(a.cloud_weights, encoders.cloud_layers());

    std::optional<std::string> baseline;
    for (const auto& [s, on] : passes) {
        if (scenario_tag(s, on) == a.baseline) baseline = a.baseline;
    }

    ReplayEngine engine(config, std::move(predictors), encoders);
    const auto result = engine.replay(sessions, passes, a.seed, baseline);

    if (!a.report.empty()) write_text(a.report, report_to_json(result.report).dump(2) + "\n");
    if (!a.log.empty()) {
        std::string text;
        for (const auto& l : result.logs) text += session_log_json(l).dump() + "\n";
        write_text(a.log, text);
    }
    std::cout << report_to_table(result.report);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diffx benchmark and training driver"};
    app.require_subcommand(1);

    GenDatasetArgs gd;
    auto* gen_ds = app.add_subcommand("gen-dataset", "Write a synthetic interactive-prompt dataset");
    gen_ds->add_option("--n", gd.n, "Number of sessions")->check(CLI::PositiveNumber);
    gen_ds->add_option("--rounds", gd.rounds, "Rounds per session")->check(CLI::PositiveNumber);
    gen_ds->add_option("--seed", gd.seed);
    gen_ds->add_option("--out", gd.out)->required();

    GenPairsArgs gp;
    auto* gen_pr = app.add_subcommand("gen-pairs", "Write prompt pairs for labeling");
    gen_pr->add_option("--n", gp.n, "Number of synthetic pairs")->check(CLI::PositiveNumber);
    gen_pr->add_option("--seed", gp.seed);
    gen_pr->add_option("--dataset", gp.dataset, "Take consecutive rounds of a dataset instead");
    gen_pr->add_option("--out", gp.out)->required();

    LabelArgs la;
    auto* label = app.add_subcommand("label", "Label prompt pairs with their best strength");
    label->add_option("--pairs", la.pairs)->required();
    label->add_option("--out", la.out)->required();
    label->add_option("--seed", la.seed);
    label->add_flag("--resume", la.resume, "Continue an interrupted output file");
    label->add_option("--beta", la.beta, "Strength penalty of the mock scorer")->check(CLI::NonNegativeNumber);
    label->add_option("--score-table", la.score_table, "Use recorded scores instead of the mock scorer");
    label->add_option("--base-steps", la.base_steps)->check(CLI::PositiveNumber);
    label->add_option("--t-max", la.t_max)->check(CLI::NonNegativeNumber);

    TrainArgs ta;
    auto* trn = app.add_subcommand("train", "Train a strength predictor from labels");
    trn->add_option("--labels", ta.labels)->required();
    trn->add_option("--tier", ta.tier)->check(CLI::IsMember({"edge", "cloud"}));
    trn->add_option("--out", ta.out)->required();
    trn->add_option("--seed", ta.training.seed);
    trn->add_option("--lr", ta.training.learning_rate);
    trn->add_option("--epochs", ta.training.epochs);
    trn->add_option("--batch", ta.training.batch_size);
    trn->add_option("--lambda", ta.training.lambda);
    trn->add_option("--holdout", ta.holdout, "Fraction of labels held out for evaluation")
        ->check(CLI::Range(0.0, 0.9));

    ReplayArgs ra;
    auto* rep = app.add_subcommand("replay", "Replay a dataset and report latency per scenario");
    rep->add_option("--dataset", ra.dataset)->required();
    rep->add_option("--scenario", ra.scenarios, "cloud-only, edge-only or diffusionx (repeatable; default all)")
        ->check(CLI::IsMember({"cloud-only", "edge-only", "diffusionx"}));
    rep->add_option("--predictor", ra.predictor, "Predictor use in the diffusionx scenario")
        ->check(CLI::IsMember({"on", "off", "both"}));
    rep->add_option("--seed", ra.seed);
    rep->add_option("--report", ra.report, "Report JSON output");
    rep->add_option("--log", ra.log, "Per-session JSON Lines log output");
    rep->add_option("--edge-weights", ra.edge_weights);
    rep->add_option("--cloud-weights", ra.cloud_weights);
    rep->add_option("--baseline", ra.baseline, "Row that the delta column is relative to");
    rep->add_option("--fixed-strength", ra.fixed_strength, "Strength when the predictor is off");
    rep->add_option("--uplink-bps", ra.uplink_bps)->check(CLI::PositiveNumber);
    rep->add_option("--base-steps-edge", ra.base_steps_edge)->check(CLI::PositiveNumber);
    rep->add_option("--base-steps-cloud", ra.base_steps_cloud)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*gen_ds) run_gen_dataset(gd);
        if (*gen_pr) run_gen_pairs(gp);
        if (*label) run_label(la);
        if (*trn) run_train(ta);
        if (*rep) run_replay(ra);
    } catch (const Error& e) {
        std::cerr << "bench: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "bench: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
