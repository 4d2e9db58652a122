// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diffx/core.hpp"
#include "diffx/hashing.hpp"

namespace diffx {

enum class Activation : std::uint8_t { ReLU = 1 };

/// Fully connected regressor: ReLU hidden layers, one linear output.
/// Layer i maps dims[i] -> dims[i+1]; weights[i] is dims[i+1] x dims[i].
struct MlpParams {
    std::vector<int> layer_dims;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    Activation activation = Activation::ReLU;

    std::size_t num_layers() const noexcept { return weights.size(); }
    int input_dim() const noexcept { return layer_dims.front(); }

    std::size_t num_parameters() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) n += weights[i].size() + biases[i].size();
        return n;
    }

    double weight_norm_sq() const {
        double acc = 0.0;
        for (const auto& w : weights) acc += w.squaredNorm();
        return acc;
    }

    void validate() const {
        if (layer_dims.size() < 2 || layer_dims.back() != 1) {
            raise(ErrorCode::ShapeMismatch, "layer_dims must run input -> ... -> 1");
        }
        if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size()) {
            raise(ErrorCode::ShapeMismatch, "parameter count does not match layer_dims");
        }
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (layer_dims[i] <= 0 || weights[i].rows() != layer_dims[i + 1] ||
                weights[i].cols() != layer_dims[i] || biases[i].size() != layer_dims[i + 1]) {
                raise(ErrorCode::ShapeMismatch, "layer " + std::to_string(i) + " has the wrong shape");
            }
            if (!weights[i].allFinite() || !biases[i].allFinite()) {
                raise(ErrorCode::NonFinite, "layer " + std::to_string(i) + " has non-finite parameters");
            }
        }
    }

    friend bool operator==(const MlpParams& a, const MlpParams& b) {
        if (a.layer_dims != b.layer_dims || a.activation != b.activation) return false;
        for (std::size_t i = 0; i < a.weights.size(); ++i) {
            if (a.weights[i] != b.weights[i] || a.biases[i] != b.biases[i]) return false;
        }
        return true;
    }
};

/// Parameters are stored at single precision; training and init keep every
/// value representable as float so the weight file round-trips exactly.
inline double to_storage(double v) { return static_cast<double>(static_cast<float>(v)); }

inline void round_to_storage(MlpParams& p) {
    for (auto& w : p.weights) w = w.unaryExpr(&to_storage);
    for (auto& b : p.biases) b = b.unaryExpr(&to_storage);
}

/// Seeded uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
inline MlpParams init_mlp(std::vector<int> layer_dims, std::uint64_t seed) {
    MlpParams p;
    p.layer_dims = std::move(layer_dims);
    if (p.layer_dims.size() < 2 || p.layer_dims.back() != 1) {
        raise(ErrorCode::ShapeMismatch, "layer_dims must run input -> ... -> 1");
    }
    Rng rng(seed);
    for (std::size_t i = 0; i + 1 < p.layer_dims.size(); ++i) {
        const int fan_in = p.layer_dims[i];
        const int fan_out = p.layer_dims[i + 1];
        if (fan_in <= 0 || fan_out <= 0) raise(ErrorCode::ShapeMismatch, "layer dims must be positive");
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Eigen::MatrixXd w(fan_out, fan_in);
        // row-major fill order keeps the draw sequence independent of Eigen's storage order
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) w(r, c) = to_storage(rng.uniform(-bound, bound));
        }
        Eigen::VectorXd b(fan_out);
        for (int r = 0; r < fan_out; ++r) b(r) = to_storage(rng.uniform(-bound, bound));
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
    }
    return p;
}

/// Forward pass for a batch laid out as columns (input_dim x n). Returns 1 x n.
inline Eigen::RowVectorXd mlp_forward_batch(const MlpParams& params, const Eigen::MatrixXd& x) {
    if (x.rows() != params.input_dim()) {
        raise(ErrorCode::DimensionMismatch, "input has " + std::to_string(x.rows()) + " features, expected " +
                                                std::to_string(params.input_dim()));
    }
    Eigen::MatrixXd a = x;
    const std::size_t last = params.num_layers() - 1;
    for (std::size_t i = 0; i < params.num_layers(); ++i) {
        Eigen::MatrixXd z = params.weights[i] * a;
        z.colwise() += params.biases[i];
        if (i < last) z = z.cwiseMax(0.0);
        a = std::move(z);
    }
    return a.row(0);
}

/// Raw (pre-clip) scalar output.
inline double mlp_forward(const MlpParams& params, std::span<const double> x) {
    if (static_cast<int>(x.size()) != params.input_dim()) {
        raise(ErrorCode::DimensionMismatch, "input has " + std::to_string(x.size()) + " features, expected " +
                                                std::to_string(params.input_dim()));
    }
    const Eigen::Map<const Eigen::VectorXd> col(x.data(), static_cast<Eigen::Index>(x.size()));
    return mlp_forward_batch(params, col)(0);
}

struct TrainingExample {
    std::vector<double> features;
    Strength label;
};

struct MlpGradient {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    double loss = 0.0;
};

/// loss = mean((y_hat - y)^2) + lambda * sum_i ||W_i||_F^2   (biases unregularized)
/// Batch is given column-wise: features (input_dim x n), labels (n).
inline MlpGradient mlp_gradient(const MlpParams& params, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                double lambda) {
    const Eigen::Index n = x.cols();
    if (n == 0) raise(ErrorCode::InvalidArgument, "gradient batch must be non-empty");
    if (y.size() != n) raise(ErrorCode::DimensionMismatch, "label count does not match batch");
    if (x.rows() != params.input_dim()) raise(ErrorCode::DimensionMismatch, "batch feature dimension mismatch");

    const std::size_t layers = params.num_layers();
    std::vector<Eigen::MatrixXd> acts;  // acts[i] is the input of layer i
    acts.reserve(layers + 1);
    acts.push_back(x);
    for (std::size_t i = 0; i < layers; ++i) {
        Eigen::MatrixXd z = params.weights[i] * acts.back();
        z.colwise() += params.biases[i];
        if (i + 1 < layers) z = z.cwiseMax(0.0);
        acts.push_back(std::move(z));
    }

    const Eigen::RowVectorXd residual = acts.back().row(0) - y.transpose();
    MlpGradient g;
    g.loss = residual.squaredNorm() / static_cast<double>(n) + lambda * params.weight_norm_sq();
    g.weights.resize(layers);
    g.biases.resize(layers);

    Eigen::MatrixXd delta = (2.0 / static_cast<double>(n)) * residual;  // dL/dz for the output layer
    for (std::size_t k = layers; k-- > 0;) {
        g.weights[k] = delta * acts[k].transpose() + 2.0 * lambda * params.weights[k];
        g.biases[k] = delta.rowwise().sum();
        if (k > 0) {
            Eigen::MatrixXd back = params.weights[k].transpose() * delta;
            // ReLU derivative; acts[k] is the post-activation of layer k-1
            delta = back.cwiseProduct((acts[k].array() > 0.0).cast<double>().matrix());
        }
    }
    return g;
}

inline MlpGradient mlp_gradient(const MlpParams& params, std::span<const TrainingExample> batch, double lambda) {
    if (batch.empty()) raise(ErrorCode::InvalidArgument, "gradient batch must be non-empty");
    Eigen::MatrixXd x(params.input_dim(), static_cast<Eigen::Index>(batch.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
    for (std::size_t j = 0; j < batch.size(); ++j) {
        if (static_cast<int>(batch[j].features.size()) != params.input_dim()) {
            raise(ErrorCode::DimensionMismatch, "example feature dimension mismatch");
        }
        x.col(static_cast<Eigen::Index>(j)) =
            Eigen::Map<const Eigen::VectorXd>(batch[j].features.data(), params.input_dim());
        y(static_cast<Eigen::Index>(j)) = batch[j].label.value;
    }
    return mlp_gradient(params, x, y, lambda);
}

inline double mlp_loss(const MlpParams& params, std::span<const TrainingExample> batch, double lambda) {
    double sq = 0.0;
    for (const auto& ex : batch) {
        const double r = mlp_forward(params, ex.features) - ex.label.value;
        sq += r * r;
    }
    return sq / static_cast<double>(batch.size()) + lambda * params.weight_norm_sq();
}

enum class Regularizer { L2 };

struct TrainingConfig {
    double learning_rate = 0.05;
    int epochs = 200;
    int batch_size = 32;
    double lambda = 1e-4;
    std::uint64_t seed = 0;
    Regularizer regularizer = Regularizer::L2;

    void validate() const {
        if (!(learning_rate > 0.0)) raise(ErrorCode::InvalidArgument, "learning_rate must be positive");
        if (epochs < 1) raise(ErrorCode::InvalidArgument, "epochs must be positive");
        if (batch_size < 1) raise(ErrorCode::InvalidArgument, "batch_size must be positive");
        if (!(lambda >= 0.0)) raise(ErrorCode::InvalidArgument, "lambda must be non-negative");
    }
};

struct TrainResult {
    MlpParams params;
    double initial_loss = 0.0;
    std::vector<double> loss_history;  // mean mini-batch objective per epoch
};

/// Mini-batch gradient descent at a fixed learning rate, reshuffling with the
/// config seed each epoch. Deterministic in (params, dataset, cfg).
inline TrainResult train(MlpParams params, std::span<const TrainingExample> dataset, const TrainingConfig& cfg) {
    cfg.validate();
    params.validate();
    if (dataset.empty()) raise(ErrorCode::InvalidArgument, "training dataset must be non-empty");

    const Eigen::Index d = params.input_dim();
    const Eigen::Index total = static_cast<Eigen::Index>(dataset.size());
    Eigen::MatrixXd features(d, total);
    Eigen::VectorXd labels(total);
    for (Eigen::Index j = 0; j < total; ++j) {
        const auto& ex = dataset[static_cast<std::size_t>(j)];
        if (static_cast<Eigen::Index>(ex.features.size()) != d) {
            raise(ErrorCode::DimensionMismatch, "example feature dimension mismatch");
        }
        features.col(j) = Eigen::Map<const Eigen::VectorXd>(ex.features.data(), d);
        labels(j) = ex.label.value;
    }

    TrainResult result;
    result.initial_loss = mlp_gradient(params, features, labels, cfg.lambda).loss;

    Rng rng(cfg.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Eigen::MatrixXd xb;
    Eigen::VectorXd yb;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<Eigen::Index>(order));
        double weighted = 0.0;
        for (Eigen::Index start = 0; start < total; start += cfg.batch_size) {
            const Eigen::Index n = std::min<Eigen::Index>(cfg.batch_size, total - start);
            xb.resize(d, n);
            yb.resize(n);
            for (Eigen::Index j = 0; j < n; ++j) {
                const auto src = order[static_cast<std::size_t>(start + j)];
                xb.col(j) = features.col(src);
                yb(j) = labels(src);
            }
            const auto g = mlp_gradient(params, xb, yb, cfg.lambda);
            if (!std::isfinite(g.loss)) {
                raise(ErrorCode::DivergenceDetected, "loss became non-finite in epoch " + std::to_string(epoch));
            }
            weighted += g.loss * static_cast<double>(n);
            for (std::size_t k = 0; k < params.num_layers(); ++k) {
                params.weights[k] -= cfg.learning_rate * g.weights[k];
                params.biases[k] -= cfg.learning_rate * g.biases[k];
            }
        }
        const double epoch_loss = weighted / static_cast<double>(total);
        if (!std::isfinite(epoch_loss)) {
            raise(ErrorCode::DivergenceDetected, "loss became non-finite in epoch " + std::to_string(epoch));
        }
        result.loss_history.push_back(epoch_loss);
    }
    round_to_storage(params);
    params.validate();
    result.params = std::move(params);
    return result;
}

}  // namespace diffx
