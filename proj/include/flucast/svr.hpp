#pragma once

#include "flucast/linalg.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace flucast::models {

struct SvrParams {
    double C = 1.0;
    double epsilon = 0.1;
    double gamma = 0.1;
    /// Maximal KKT violation accepted by the SMO stopping rule.
    double tolerance = 1e-3;
};

/// Kernel expansion f(x) = sum_i coef_i k(sv_i, x) + bias.
///
/// |coef_i| <= C and sum_i coef_i = 0 (dual feasibility).
struct SvrModel {
    Matrix support_inputs;
    std::vector<double> dual_coefficients;
    double bias = 0.0;
    double gamma = 0.1;
    double epsilon = 0.1;
    double C = 1.0;

    std::size_t input_dim() const { return static_cast<std::size_t>(support_inputs.cols()); }
};

/// Result of the raw dual solve; coefficients are alpha - alpha* per training point.
struct SvrDualSolution {
    Vector coefficients;
    double bias = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Solve the epsilon-SVR dual by SMO with second-order working-set selection, then try an
/// exact solve on the free set (kept only when it stays feasible and lowers the objective).
SvrDualSolution solve_svr_dual(const Matrix& gram, std::span<const double> targets, double C, double epsilon,
                               double tolerance, std::size_t max_iterations);

/// Dual objective in minimisation form:
/// 1/2 b'Kb - y'b + eps * sum |b_i|.
double svr_dual_objective(const Matrix& gram, std::span<const double> targets, const Vector& coefficients,
                          double epsilon);

SvrModel train_svr(const Matrix& inputs, std::span<const double> targets, const SvrParams& params);

/// As above with a caller-supplied Gram matrix (rbf_gram(inputs, params.gamma)),
/// so several targets can share one kernel evaluation.
SvrModel train_svr(const Matrix& inputs, const Matrix& gram, std::span<const double> targets,
                   const SvrParams& params);

double predict_svr(const SvrModel& model, std::span<const double> x);

} // namespace flucast::models
