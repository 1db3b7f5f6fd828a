#pragma once

#include "flucast/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace flucast::models {

/// Single-hidden-layer perceptron with ReLU hidden units and linear outputs:
/// y = W_out * relu(W_hidden * x + b_hidden) + b_out.
struct MlpModel {
    Matrix hidden_weights;  // k x d
    Vector hidden_biases;   // k
    Matrix output_weights;  // H x k
    Vector output_biases;   // H

    std::size_t hidden_size() const { return static_cast<std::size_t>(hidden_weights.rows()); }
    std::size_t input_dim() const { return static_cast<std::size_t>(hidden_weights.cols()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(output_biases.size()); }
};

struct MlpTrainOptions {
    std::size_t hidden_size = 10;
    std::uint64_t seed = 0;
    std::size_t epochs = 200;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    /// Train on z-scored inputs and targets and fold the scaling back into the weights.
    bool standardize = true;
};

/// Glorot-uniform weights, bound sqrt(6 / (fan_in + fan_out)) per layer; zero biases.
MlpModel init_mlp(std::size_t input_dim, std::size_t hidden_size, std::size_t output_dim, std::uint64_t seed);

/// Mean of squared errors over all n x H cells.
double mlp_loss(const MlpModel& model, const Matrix& inputs, const Matrix& targets);

/// Gradient of mlp_loss, laid out like the model.
MlpModel mlp_loss_gradient(const MlpModel& model, const Matrix& inputs, const Matrix& targets);

struct MlpFit {
    MlpModel model;
    /// Loss before each epoch's update.
    std::vector<double> loss_history;
};

/// Full-batch Adam from `initial`.
MlpFit train_mlp_from(MlpModel initial, const Matrix& inputs, const Matrix& targets,
                      const MlpTrainOptions& options);

/// Full-batch Adam from a seeded Glorot initialisation, on standardized data unless disabled.
MlpModel train_mlp(const Matrix& inputs, const Matrix& targets, const MlpTrainOptions& options);

std::vector<double> predict_mlp(const MlpModel& model, std::span<const double> x);

/// Batched forward pass, one output row per input row.
Matrix predict_mlp(const MlpModel& model, const Matrix& inputs);

} // namespace flucast::models
