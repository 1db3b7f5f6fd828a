#pragma once

#include "flucast/linalg.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace flucast::models {

struct MsvrParams {
    double C = 1.0;
    double epsilon = 0.1;
    double gamma = 0.1;
    /// Stop when the relative objective decrease falls below this.
    double tolerance = 1e-6;
    std::size_t max_iterations = 100;
};

/// Multi-output SVR with a hyper-spherical insensitive zone.
///
/// prediction(x) = k(x, support)' * coefficient_matrix + biases.
struct MsvrModel {
    Matrix support_inputs;
    Matrix coefficient_matrix;
    Vector biases;
    double gamma = 0.1;
    double epsilon = 0.1;
    double C = 1.0;

    std::size_t input_dim() const { return static_cast<std::size_t>(support_inputs.cols()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(biases.size()); }
};

struct MsvrTrace {
    /// Objective of the starting point followed by every accepted iterate.
    std::vector<double> objective;
    std::size_t iterations = 0;
    bool converged = false;
    bool ridge_used = false;
};

struct MsvrFit {
    MsvrModel model;
    MsvrTrace trace;
};

/// Called with (coefficients over all training rows, biases) after every accepted step.
using MsvrObserver = std::function<void(const Matrix&, const Vector&)>;

/// 1/2 sum_j b_j' K b_j + C sum_i L(u_i), with L(u) = (u - eps)^2 for u >= eps, 0 otherwise,
/// and u_i the Euclidean norm of row i of Y - K B - 1 b'.
double msvr_objective(const Matrix& gram, const Matrix& targets, const Matrix& coefficients, const Vector& biases,
                      double C, double epsilon);

/// Iteratively reweighted least squares on the primal.
MsvrFit train_msvr(const Matrix& inputs, const Matrix& targets, const MsvrParams& params,
                   const MsvrObserver& observer = {});

std::vector<double> predict_msvr(const MsvrModel& model, std::span<const double> x);

} // namespace flucast::models
