// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "diffx/codec.hpp"
#include "diffx/service/http_api.hpp"

using namespace diffx;

namespace {

class FlakyBackend final : public GenerationBackend {
public:
    explicit FlakyBackend(Provenance p) : inner_(MockBackendConfig{ProviderConfig::hash(kImageDim, 3), p}) {}
    GeneratedImage txt2img(std::string_view prompt, int steps, std::uint64_t seed) override {
        check();
        return inner_.txt2img(prompt, steps, seed);
    }
    GeneratedImage img2img(const GeneratedImage& img, std::string_view prompt, const DenoisePlan& plan,
                           std::uint64_t seed) override {
        check();
        return inner_.img2img(img, prompt, plan, seed);
    }
    std::string name() const override { return "flaky"; }
    std::atomic<bool> down{false};

private:
    void check() const {
        if (down) raise(ErrorCode::BackendUnavailable, "backend is down");
    }
    MockBackend inner_;
};

MlpParams constant_net(std::vector<int> dims, double out_bias) {
    auto p = init_mlp(std::move(dims), 1);
    for (auto& w : p.weights) w.setZero();
    for (auto& b : p.biases) b.setZero();
    p.biases.back()(0) = out_bias;
    return p;
}

struct Fixture {
    explicit Fixture(const std::string& name, bool predictor = false, bool fresh = true) {
        dir = std::filesystem::temp_directory_path() / "diffx_service_test" / name;
        if (fresh) std::filesystem::remove_all(dir);
        config.persistence_path = dir;
        config.predictor_enabled = predictor;
        edge = std::make_shared<FlakyBackend>(Provenance::MockEdge);
        cloud = std::make_shared<FlakyBackend>(Provenance::MockCloud);
        reopen();
    }

    void reopen() {
        orch.reset();
        FeatureEncoders enc;
        orch = std::make_unique<Orchestrator>(
            config, edge, cloud, Predictors{constant_net(enc.edge_layers(), 0.6), constant_net(enc.cloud_layers(), 0.5)});
    }

    std::filesystem::path dir;
    ServiceConfig config;
    std::shared_ptr<FlakyBackend> edge;
    std::shared_ptr<FlakyBackend> cloud;
    std::unique_ptr<Orchestrator> orch;
};

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Config, ParsesFileAndEnvOverrides) {
    const auto cfg = parse_config_text(
        "# comment\nlisten_addr = 0.0.0.0:9000\npredictor_enabled = false\nfixed_strength = 0.75  # inline\n"
        "base_steps_edge=30\nuplink_bps = 1e7\n");
    EXPECT_EQ(cfg.port(), 9000);
    EXPECT_EQ(cfg.host(), "0.0.0.0");
    EXPECT_DOUBLE_EQ(cfg.fixed_strength.value, 0.75);
    EXPECT_EQ(cfg.base_steps_edge, 30);
    EXPECT_DOUBLE_EQ(cfg.network.uplink_bps, 1e7);

    const auto env = apply_env_overrides(cfg, [](const std::string& name) -> std::optional<std::string> {
        if (name == "DIFFX_BASE_STEPS_EDGE") return "12";
        if (name == "DIFFX_SEED") return "99";
        return std::nullopt;
    });
    EXPECT_EQ(env.base_steps_edge, 12);
    EXPECT_EQ(env.seed, 99u);
}

TEST(Config, RejectsBadValues) {
    EXPECT_EQ(code_of([] { parse_config_text("nonsense = 1"); }), ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { parse_config_text("base_steps_edge = many"); }), ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { parse_config_text("just a line"); }), ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { parse_config_text("fixed_strength = 0.95").validate(); }), ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { parse_config_text("base_steps_cloud = 0").validate(); }), ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { Orchestrator::from_config(parse_config_text("predictor_enabled = true")); }),
              ErrorCode::ConfigError);
}

TEST(Orchestrator, FirstPromptIsEdgeTxt2Img) {
    Fixture f("first");
    const auto id = f.orch->create_session();
    EXPECT_TRUE(f.orch->get_session(id).state.history.empty());
    const auto rec = f.orch->submit_prompt(id, "a cat");
    EXPECT_EQ(rec.tier, Tier::Edge);
    EXPECT_FALSE(rec.predicted_strength.has_value());
    EXPECT_EQ(rec.steps_executed, 25);
    EXPECT_EQ(rec.round_index, 1);
    EXPECT_NEAR(rec.latency.total_s, 11.79, 1e-9);
    EXPECT_TRUE(f.orch->images().contains(rec.image_ref));
}

TEST(Orchestrator, PredictorOnSecondRound) {
    Fixture f("predictor_on", true);
    const auto id = f.orch->create_session();
    f.orch->submit_prompt(id, "a cat");
    const auto rec = f.orch->submit_prompt(id, "a cat on a red sofa");
    ASSERT_TRUE(rec.predicted_strength.has_value());
    EXPECT_GE(rec.predicted_strength->value, 0.40);
    EXPECT_LE(rec.predicted_strength->value, 0.90);
    EXPECT_EQ(rec.steps_executed, steps_for_strength(*rec.predicted_strength, 25));
    EXPECT_DOUBLE_EQ(rec.latency.predict_s, 0.01);
    EXPECT_EQ(f.orch->predictor_calls(), 1u);
}

TEST(Orchestrator, PredictorOffUsesFixedStrengthAndNeverPredicts) {
    Fixture f("predictor_off");
    const auto id = f.orch->create_session(false);
    f.orch->submit_prompt(id, "a cat");
    const auto rec = f.orch->submit_prompt(id, "a cat on a red sofa");
    EXPECT_EQ(rec.steps_executed, 23);  // round(0.90 * 25)
    const auto fin = f.orch->finalize(id);
    EXPECT_EQ(fin.steps_executed, 23);
    EXPECT_EQ(f.orch->predictor_calls(), 0u);
}

TEST(Orchestrator, FinalizeAccountsForUpload) {
    Fixture f("finalize", true);
    const auto id = f.orch->create_session();
    EXPECT_EQ(code_of([&] { f.orch->finalize(id); }), ErrorCode::IllegalTransition);
    f.orch->submit_prompt(id, "a cat");
    f.orch->submit_prompt(id, "a cat on a sofa");
    f.orch->submit_prompt(id, "a cat on a sofa, oil painting");
    const auto rec = f.orch->finalize(id);
    EXPECT_NEAR(rec.latency.transmit_s, 0.200, 1e-9);
    EXPECT_EQ(rec.tier, Tier::Cloud);
    EXPECT_EQ(rec.steps_executed, steps_for_strength(Strength{0.5}, 25));
    const auto view = f.orch->get_session(id);
    EXPECT_EQ(view.state.phase, Phase::Refined);
    ASSERT_EQ(view.state.history.size(), 4u);
    EXPECT_EQ(view.state.history.back().tier, Tier::Cloud);
    EXPECT_EQ(code_of([&] { f.orch->submit_prompt(id, "more"); }), ErrorCode::IllegalTransition);
    EXPECT_EQ(code_of([&] { f.orch->get_session("nope"); }), ErrorCode::UnknownSession);
    EXPECT_EQ(code_of([&] { f.orch->submit_prompt(id, "  "); }), ErrorCode::EmptyText);
}

TEST(Orchestrator, BackendOutageRevertsAndRecovers) {
    Fixture f("outage");
    const auto id = f.orch->create_session();
    f.edge->down = true;
    EXPECT_EQ(code_of([&] { f.orch->submit_prompt(id, "a cat"); }), ErrorCode::BackendUnavailable);
    EXPECT_EQ(f.orch->get_session(id).state.phase, Phase::Created);
    f.edge->down = false;
    f.orch->submit_prompt(id, "a cat");

    f.cloud->down = true;
    EXPECT_EQ(code_of([&] { f.orch->finalize(id); }), ErrorCode::BackendUnavailable);
    EXPECT_EQ(f.orch->get_session(id).state.phase, Phase::PreviewReady);
    EXPECT_EQ(f.orch->get_session(id).state.history.size(), 1u);
    f.cloud->down = false;
    EXPECT_EQ(f.orch->finalize(id).tier, Tier::Cloud);
}

TEST(Orchestrator, MetricsPerScenarioTag) {
    Fixture f("metrics", true);
    EXPECT_TRUE(f.orch->metrics().rows.empty());
    for (bool predictor : {true, true, false}) {
        const auto id = f.orch->create_session(predictor);
        f.orch->submit_prompt(id, "a boat");
        f.orch->submit_prompt(id, "a boat at sunset");
        f.orch->finalize(id);
    }
    f.orch->submit_prompt(f.orch->create_session(), "never finalized");
    const auto report = f.orch->metrics();
    ASSERT_EQ(report.rows.size(), 2u);
    EXPECT_EQ(report.rows[0].scenario, "diffusionx");
    EXPECT_EQ(report.rows[0].n_sessions, 2u);
    EXPECT_EQ(report.rows[1].scenario, "diffusionx-no-predictor");
    EXPECT_NEAR(*report.rows[0].mean_trans_s, 0.2, 1e-9);
    // predictor on: 0.01 + 0.40 + 13 * 0.55 + 0.20; off: 0.40 + 23 * 0.55 + 0.20
    EXPECT_NEAR(report.rows[0].mean_total_s, 7.76, 1e-9);
    EXPECT_NEAR(report.rows[1].mean_total_s, 13.25, 1e-9);
}

TEST(Orchestrator, RestartReplaysHistoriesExactly) {
    Fixture f("restart", true);
    std::vector<std::string> ids;
    for (int s = 0; s < 4; ++s) {
        const auto id = f.orch->create_session(s % 2 == 0);
        ids.push_back(id);
        for (int r = 0; r <= s; ++r) f.orch->submit_prompt(id, "a house " + std::string(r + 1, 'x'));
        if (s >= 2) f.orch->finalize(id);
        if (s == 3) f.orch->close(id);
    }
    std::map<std::string, std::string> before;
    for (const auto& id : ids) before[id] = session_view_json(f.orch->get_session(id)).dump();
    const auto metrics_before = report_to_json(f.orch->metrics()).dump();

    f.reopen();
    for (const auto& id : ids) EXPECT_EQ(session_view_json(f.orch->get_session(id)).dump(), before[id]);
    EXPECT_EQ(report_to_json(f.orch->metrics()).dump(), metrics_before);

    // sessions keep working after the restart, and new ids do not collide
    const auto next = f.orch->submit_prompt(ids[1], "a house on a hill");
    EXPECT_EQ(next.round_index, 3);
    const auto fresh = f.orch->create_session();
    EXPECT_EQ(std::count(ids.begin(), ids.end(), fresh), 0);
}

TEST(Orchestrator, TornLogTailIsIgnored) {
    Fixture f("torn");
    const auto id = f.orch->create_session();
    f.orch->submit_prompt(id, "a cat");
    const auto expected = session_view_json(f.orch->get_session(id)).dump();
    f.orch.reset();
    {
        std::ofstream out(f.dir / "events.jsonl", std::ios::app);
        out << R"({"ts":"x","session":")" << id << R"(","event":"sub)";
    }
    f.reopen();
    EXPECT_EQ(session_view_json(f.orch->get_session(id)).dump(), expected);
    f.orch->submit_prompt(id, "a cat in the snow");
    f.reopen();
    EXPECT_EQ(f.orch->get_session(id).state.round_index, 2);
}

TEST(Orchestrator, ConcurrentSubmitsAreSerialized) {
    Fixture f("stress");
    const auto id = f.orch->create_session();
    constexpr int kThreads = 8;
    constexpr int kPerThread = 5;
    std::vector<std::thread> threads;
    for (int t = 0; t < kThreads; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < kPerThread; ++i) f.orch->submit_prompt(id, "t" + std::to_string(t) + " i" + std::to_string(i));
        });
    }
    for (auto& th : threads) th.join();
    const auto view = f.orch->get_session(id);
    ASSERT_EQ(view.state.round_index, kThreads * kPerThread);
    for (std::size_t i = 0; i < view.state.history.size(); ++i) {
        EXPECT_EQ(view.state.history[i].round_index, static_cast<int>(i) + 1);
    }
    EXPECT_EQ(view.state.current_prompt, view.state.history.back().prompt);
    const auto before = session_view_json(view).dump();
    f.reopen();
    EXPECT_EQ(session_view_json(f.orch->get_session(id)).dump(), before);
}

TEST(Orchestrator, PredictorWithoutWeightsIsConfigError) {
    ServiceConfig cfg;
    cfg.persistence_path = std::filesystem::temp_directory_path() / "diffx_service_test" / "noweights";
    std::filesystem::remove_all(cfg.persistence_path);
    auto backend = std::make_shared<MockBackend>();
    Orchestrator orch(cfg, backend, backend, {});
    EXPECT_EQ(code_of([&] { orch.create_session(true); }), ErrorCode::ConfigError);
    cfg.predictor_enabled = true;
    cfg.edge_weights = "/nonexistent/edge.bin";
    cfg.cloud_weights = "/nonexistent/cloud.bin";
    EXPECT_EQ(code_of([&] { Orchestrator::from_config(cfg); }), ErrorCode::ConfigError);
}

TEST(Http, EndToEnd) {
    Fixture f("http", true);
    ApiServer api(*f.orch);
    const int port = api.start("127.0.0.1", 0);
    httplib::Client client("127.0.0.1", port);

    auto health = client.Get("/healthz");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);

    auto created = client.Post("/sessions", "", "application/json");
    ASSERT_TRUE(created);
    EXPECT_EQ(created->status, 201);
    const auto sid = nlohmann::json::parse(created->body)["session_id"].get<std::string>();

    auto early = client.Post("/sessions/" + sid + "/finalize", "", "application/json");
    EXPECT_EQ(early->status, 409);
    EXPECT_EQ(nlohmann::json::parse(early->body)["error"], "IllegalTransition");

    auto first = client.Post("/sessions/" + sid + "/prompt", R"({"prompt":"a cat"})", "application/json");
    ASSERT_EQ(first->status, 200);
    const auto r1 = nlohmann::json::parse(first->body);
    EXPECT_TRUE(r1["predicted_strength"].is_null());
    EXPECT_EQ(r1["tier"], "edge");

    auto second = client.Post("/sessions/" + sid + "/prompt", R"({"prompt":"a cat on a sofa"})", "application/json");
    const auto r2 = nlohmann::json::parse(second->body);
    EXPECT_GE(r2["predicted_strength"].get<double>(), 0.40);
    EXPECT_LE(r2["predicted_strength"].get<double>(), 0.90);

    auto image = client.Get(r2["image_url"].get<std::string>());
    ASSERT_EQ(image->status, 200);
    EXPECT_EQ(image->get_header_value("Content-Type"), "image/png");
    EXPECT_EQ(image->body.size(), kMockPreviewPayloadBytes);
    EXPECT_EQ(sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(image->body.data()), image->body.size())),
              r2["image_ref"].get<std::string>());

    auto fin = client.Post("/sessions/" + sid + "/finalize", "", "application/json");
    ASSERT_EQ(fin->status, 200);
    const auto rf = nlohmann::json::parse(fin->body);
    EXPECT_EQ(rf["tier"], "cloud");
    EXPECT_NEAR(rf["latency"]["transmit_s"].get<double>(), 0.2, 1e-9);
    EXPECT_EQ(rf["phase"], "Refined");

    const auto session = nlohmann::json::parse(client.Get("/sessions/" + sid)->body);
    EXPECT_EQ(session["history"].size(), 3u);
    const auto metrics = nlohmann::json::parse(client.Get("/metrics")->body);
    EXPECT_EQ(metrics["rows"].size(), 1u);

    EXPECT_EQ(client.Get("/sessions/unknown")->status, 404);
    EXPECT_EQ(client.Get("/images/" + std::string(64, '0'))->status, 404);
    EXPECT_EQ(client.Post("/sessions/" + sid + "/prompt", "{oops", "application/json")->status, 400);
    f.cloud->down = true;
    auto sid2 = nlohmann::json::parse(client.Post("/sessions", R"({"predictor":false})", "application/json")->body)
                    ["session_id"].get<std::string>();
    client.Post("/sessions/" + sid2 + "/prompt", R"({"prompt":"a dog"})", "application/json");
    EXPECT_EQ(client.Post("/sessions/" + sid2 + "/finalize", "", "application/json")->status, 503);
    EXPECT_EQ(nlohmann::json::parse(client.Get("/sessions/" + sid2)->body)["phase"], "PreviewReady");
    api.stop();
}
