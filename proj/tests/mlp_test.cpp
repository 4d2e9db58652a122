// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <zlib.h>

#include "diffx/predictor.hpp"
#include "diffx/weights_io.hpp"

using namespace diffx;

namespace {

std::vector<TrainingExample> random_batch(int dim, int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TrainingExample> out;
    for (int i = 0; i < n; ++i) {
        TrainingExample ex;
        for (int d = 0; d < dim; ++d) ex.features.push_back(rng.uniform(-1.0, 1.0));
        ex.label = Strength{rng.uniform(0.4, 0.9)};
        out.push_back(std::move(ex));
    }
    return out;
}

MlpParams constant_net(std::vector<int> dims, double out_bias) {
    auto p = init_mlp(std::move(dims), 1);
    for (auto& w : p.weights) w.setZero();
    for (auto& b : p.biases) b.setZero();
    p.biases.back()(0) = out_bias;
    return p;
}

double rel_err(double a, double n) { return std::abs(a - n) / std::max(std::abs(a) + std::abs(n), 1e-8); }

std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "diffx_mlp_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

TEST(Features, EdgeFeatureArithmetic) {
    const auto f = edge_features(EmbeddingVector{{1, 0}}, EmbeddingVector{{0, 1}});
    EXPECT_EQ(f, (std::vector<double>{1, 0, 0, 1, -1, 1}));
    const auto same = edge_features(EmbeddingVector{{0.3, 0.4}}, EmbeddingVector{{0.3, 0.4}});
    EXPECT_EQ(same[4], 0.0);
    EXPECT_EQ(same[5], 0.0);
    EXPECT_THROW(edge_features(EmbeddingVector{{1}}, EmbeddingVector{{1, 2}}), Error);
}

TEST(Features, FusedShapeAndZeroImage) {
    EmbeddingVector h{std::vector<double>(768, 0.1)};
    EmbeddingVector v{std::vector<double>(512, 0.0)};
    const auto f = fuse_multimodal(h, v);
    ASSERT_EQ(f.size(), 1280u);
    for (std::size_t i = 0; i < 768; ++i) EXPECT_EQ(f[i], 0.1);
    for (std::size_t i = 768; i < 1280; ++i) EXPECT_EQ(f[i], 0.0);
    v.values[3] = std::nan("");
    EXPECT_THROW(fuse_multimodal(h, v), Error);
}

TEST(Forward, ConstantNetwork) {
    const auto p = constant_net({5, 4, 1}, 0.6);
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        std::vector<double> x(5);
        for (auto& v : x) v = rng.uniform(-10, 10);
        EXPECT_DOUBLE_EQ(mlp_forward(p, x), 0.6);
    }
}

TEST(Forward, SingleLayerArithmetic) {
    auto p = init_mlp({2, 1}, 0);
    p.weights[0] << 0.5, -0.5;
    p.biases[0] << 0.0;
    EXPECT_EQ(mlp_forward(p, std::vector<double>{1, 1}), 0.0);
    EXPECT_THROW(mlp_forward(p, std::vector<double>{1, 1, 1}), Error);
}

TEST(Forward, HiddenReluByHand) {
    auto p = init_mlp({2, 2, 1}, 0);
    p.weights[0] << 1, 0, 0, 1;
    p.biases[0] << 0, 0;
    p.weights[1] << 2, 3;
    p.biases[1] << 0.25;
    // relu(-1)=0, relu(2)=2 -> 3*2 + 0.25
    EXPECT_DOUBLE_EQ(mlp_forward(p, std::vector<double>{-1, 2}), 6.25);
}

TEST(Gradient, PerfectFitIsZero) {
    const auto p = constant_net({3, 4, 1}, 0.6);
    auto batch = random_batch(3, 8, 2);
    for (auto& ex : batch) ex.label = Strength{0.6};
    const auto g = mlp_gradient(p, batch, 0.0);
    EXPECT_EQ(g.loss, 0.0);
    for (std::size_t k = 0; k < g.weights.size(); ++k) {
        EXPECT_EQ(g.weights[k].cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(g.biases[k].cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Gradient, SingleExampleLoss) {
    const auto p = constant_net({2, 1}, 0.5);
    std::vector<TrainingExample> batch{{{0.2, 0.7}, Strength{0.6}}};
    EXPECT_NEAR(mlp_gradient(p, batch, 0.0).loss, 0.01, 1e-15);
}

TEST(Gradient, MatchesCentralDifferences) {
    for (double lambda : {0.0, 1e-2}) {
        const auto p = init_mlp({10, 8, 1}, 17);
        const auto batch = random_batch(10, 16, 5);
        const auto g = mlp_gradient(p, batch, lambda);
        const double eps = 1e-4;
        double worst = 0.0;
        for (std::size_t k = 0; k < p.num_layers(); ++k) {
            for (Eigen::Index i = 0; i < p.weights[k].size(); ++i) {
                auto plus = p;
                auto minus = p;
                plus.weights[k].data()[i] += eps;
                minus.weights[k].data()[i] -= eps;
                const double num = (mlp_loss(plus, batch, lambda) - mlp_loss(minus, batch, lambda)) / (2 * eps);
                worst = std::max(worst, rel_err(g.weights[k].data()[i], num));
            }
            for (Eigen::Index i = 0; i < p.biases[k].size(); ++i) {
                auto plus = p;
                auto minus = p;
                plus.biases[k](i) += eps;
                minus.biases[k](i) -= eps;
                const double num = (mlp_loss(plus, batch, lambda) - mlp_loss(minus, batch, lambda)) / (2 * eps);
                worst = std::max(worst, rel_err(g.biases[k](i), num));
            }
        }
        EXPECT_LT(worst, 1e-4) << "lambda " << lambda;
    }
}

TEST(Gradient, RegularizerAddsTwoLambdaW) {
    const auto p = init_mlp({4, 3, 1}, 8);
    const auto batch = random_batch(4, 6, 1);
    const auto g0 = mlp_gradient(p, batch, 0.0);
    const auto g1 = mlp_gradient(p, batch, 0.5);
    EXPECT_NEAR(g1.loss - g0.loss, 0.5 * p.weight_norm_sq(), 1e-12);
    for (std::size_t k = 0; k < p.num_layers(); ++k) {
        EXPECT_TRUE((g1.weights[k] - g0.weights[k]).isApprox(p.weights[k], 1e-12));
        EXPECT_TRUE(g1.biases[k].isApprox(g0.biases[k]));
    }
}

TEST(Train, IdenticalExamplesDescend) {
    std::vector<TrainingExample> data(40, TrainingExample{{0.1, -0.3, 0.5}, Strength{0.7}});
    TrainingConfig cfg;
    cfg.epochs = 20;
    const auto r = train(init_mlp({3, 16, 1}, 2), data, cfg);
    EXPECT_LE(mlp_loss(r.params, data, cfg.lambda), r.initial_loss);
    EXPECT_EQ(r.loss_history.size(), 20u);
}

TEST(Train, LargeLambdaShrinksWeights) {
    const auto data = random_batch(6, 64, 3);
    TrainingConfig cfg;
    cfg.epochs = 30;
    cfg.learning_rate = 1e-4;
    cfg.lambda = 0.0;
    const auto free = train(init_mlp({6, 8, 1}, 4), data, cfg);
    cfg.lambda = 1e3;
    const auto tight = train(init_mlp({6, 8, 1}, 4), data, cfg);
    EXPECT_LT(tight.params.weight_norm_sq(), free.params.weight_norm_sq());
}

TEST(Train, NormDecreasesWithLambda) {
    const auto data = random_batch(6, 64, 3);
    TrainingConfig cfg;
    cfg.epochs = 40;
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 1e-3, 1e-1}) {
        cfg.lambda = lambda;
        const double norm = train(init_mlp({6, 8, 1}, 4), data, cfg).params.weight_norm_sq();
        EXPECT_LT(norm, prev) << lambda;
        prev = norm;
    }
}

TEST(Train, DeterministicAndDivergenceDetected) {
    const auto data = random_batch(5, 50, 9);
    TrainingConfig cfg;
    cfg.epochs = 10;
    const auto a = train(init_mlp({5, 7, 1}, 3), data, cfg);
    const auto b = train(init_mlp({5, 7, 1}, 3), data, cfg);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.loss_history, b.loss_history);

    cfg.learning_rate = 1e6;
    try {
        train(init_mlp({5, 7, 1}, 3), data, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DivergenceDetected);
    }
}

TEST(Predict, ClipsRawOutput) {
    const auto grid = CandidateSet::standard();
    const auto p = constant_net({6, 4, 1}, 1.2);
    EXPECT_DOUBLE_EQ(predict_edge_strength(p, EmbeddingVector{{1, 0}}, EmbeddingVector{{0, 1}}, grid).value, 0.90);
    const auto c = constant_net({4, 3, 1}, 0.1);
    EXPECT_DOUBLE_EQ(predict_cloud_strength(c, EmbeddingVector{{1, 0}}, EmbeddingVector{{0, 1}}, grid).value, 0.40);
}

TEST(Predict, RangeContractOnRandomWeights) {
    FeatureEncoders enc;
    const auto grid = CandidateSet::standard();
    const auto p = init_mlp(enc.edge_layers(), 12);
    const auto h = enc.edge_text.embed_text("a dog on the beach");
    const auto s = predict_edge_strength(p, h, h, grid);
    EXPECT_GE(s.value, 0.40);
    EXPECT_LE(s.value, 0.90);
}

TEST(Architectures, Shapes) {
    EXPECT_EQ(edge_architecture(384), (std::vector<int>{1152, 256, 64, 1}));
    EXPECT_EQ(cloud_architecture(768, 512), (std::vector<int>{1280, 512, 256, 64, 1}));
}

TEST(WeightsIo, RoundTripIsBitExact) {
    const auto p = init_mlp({12, 9, 5, 1}, 77);
    const auto path = temp_path("w.bin");
    save_weights(p, path);
    const auto q = load_weights(path);
    EXPECT_EQ(p, q);
    const auto batch = random_batch(12, 10, 1);
    for (const auto& ex : batch) {
        EXPECT_EQ(std::bit_cast<std::uint64_t>(mlp_forward(p, ex.features)),
                  std::bit_cast<std::uint64_t>(mlp_forward(q, ex.features)));
    }
    EXPECT_THROW(load_weights(path, std::vector<int>{12, 9, 1}), Error);
}

TEST(WeightsIo, TrainedParamsRoundTrip) {
    const auto data = random_batch(4, 32, 2);
    TrainingConfig cfg;
    cfg.epochs = 5;
    const auto trained = train(init_mlp({4, 6, 1}, 1), data, cfg).params;
    EXPECT_EQ(deserialize_weights(serialize_weights(trained)), trained);
}

TEST(WeightsIo, TruncatedOrCorruptFile) {
    const auto bytes = serialize_weights(init_mlp({3, 2, 1}, 1));
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{10}, bytes.size() - 1}) {
        std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        try {
            deserialize_weights(truncated);
            FAIL() << cut;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::FormatVersionMismatch) << cut;
        }
    }
    auto flipped = bytes;
    flipped[flipped.size() - 8] ^= 0x01;
    EXPECT_THROW(deserialize_weights(flipped), Error);
    auto version = bytes;
    version[4] = 9;
    EXPECT_THROW(deserialize_weights(version), Error);
}

TEST(WeightsIo, HandBuiltSingleLayerFile) {
    // W = (0.5, -2, 0.25), b = 0.125
    std::vector<std::uint8_t> file{'D', 'F', 'X', 'W'};
    put32(file, 1);
    put32(file, 2);
    put32(file, 3);
    put32(file, 1);
    file.push_back(1);
    std::vector<std::uint8_t> payload;
    for (float v : {0.5f, -2.0f, 0.25f, 0.125f}) put32(payload, std::bit_cast<std::uint32_t>(v));
    file.insert(file.end(), payload.begin(), payload.end());
    put32(file, static_cast<std::uint32_t>(crc32(0L, payload.data(), static_cast<uInt>(payload.size()))));

    const auto p = deserialize_weights(file);
    ASSERT_EQ(p.layer_dims, (std::vector<int>{3, 1}));
    // 0.5*2 - 2*1 + 0.25*4 + 0.125
    EXPECT_DOUBLE_EQ(mlp_forward(p, std::vector<double>{2, 1, 4}), 0.125);
    EXPECT_DOUBLE_EQ(mlp_forward(p, std::vector<double>{0, 0, 0}), 0.125);
    EXPECT_DOUBLE_EQ(mlp_forward(p, std::vector<double>{1, 0, 0}), 0.625);
    EXPECT_EQ(serialize_weights(p), file);
}
