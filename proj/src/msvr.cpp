#include "flucast/msvr.hpp"

#include "flucast/errors.hpp"
#include "flucast/kernel.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace flucast::models {

namespace {

Vector residual_norms(const Matrix& gram, const Matrix& targets, const Matrix& coefficients, const Vector& biases)
{
    Matrix residual = targets - gram * coefficients;
    residual.rowwise() -= biases.transpose();
    return residual.rowwise().norm();
}

double objective_from_norms(const Matrix& gram, const Matrix& coefficients, const Vector& norms, double C,
                            double epsilon)
{
    const double reg = 0.5 * (coefficients.transpose() * gram * coefficients).trace();
    double loss = 0.0;
    for (Eigen::Index i = 0; i < norms.size(); ++i) {
        if (norms(i) >= epsilon) {
            const double excess = norms(i) - epsilon;
            loss += excess * excess;
        }
    }
    return reg + C * loss;
}

struct StepSolution {
    Matrix coefficients; // rows for the active set only
    Vector biases;
};

// Solve  [K_SS + diag(1/a_S)] B_S + 1 b' = Y_S,  1' B_S = 0.
std::optional<StepSolution> solve_weighted(const Matrix& gram_active, const Vector& weights, const Matrix& y_active,
                                           double ridge)
{
    const Eigen::Index m = gram_active.rows();
    Matrix system = gram_active;
    for (Eigen::Index i = 0; i < m; ++i) {
        system(i, i) += 1.0 / weights(i) + ridge;
    }
    Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success) {
        return std::nullopt;
    }
    const Matrix x = llt.solve(y_active);
    const Vector z = llt.solve(Vector::Ones(m));
    const double denom = z.sum();
    if (!x.allFinite() || !z.allFinite() || !(std::abs(denom) > 0.0)) {
        return std::nullopt;
    }
    StepSolution out;
    out.biases = x.colwise().sum().transpose() / denom;
    out.coefficients = x - z * out.biases.transpose();
    if (!out.coefficients.allFinite() || !out.biases.allFinite()) {
        return std::nullopt;
    }
    return out;
}

} // namespace

double msvr_objective(const Matrix& gram, const Matrix& targets, const Matrix& coefficients, const Vector& biases,
                      double C, double epsilon)
{
    return objective_from_norms(gram, coefficients, residual_norms(gram, targets, coefficients, biases), C,
                                epsilon);
}

MsvrFit train_msvr(const Matrix& inputs, const Matrix& targets, const MsvrParams& params,
                   const MsvrObserver& observer)
{
    const Eigen::Index n = inputs.rows();
    const Eigen::Index h = targets.cols();
    if (n == 0 || h == 0) {
        throw std::invalid_argument("train_msvr: need at least one row and one output");
    }
    if (targets.rows() != n) {
        throw DimensionError("train_msvr: input rows do not match target rows");
    }
    if (!(params.C > 0.0) || !(params.epsilon >= 0.0) || !(params.gamma > 0.0)) {
        throw std::invalid_argument("train_msvr: require C > 0, epsilon >= 0, gamma > 0");
    }
    if (!inputs.allFinite() || !targets.allFinite()) {
        throw std::invalid_argument("train_msvr: non-finite training data");
    }

    const Matrix gram = rbf_gram(inputs, params.gamma);
    const double ridge = 1e-8 * gram.trace() / static_cast<double>(n);

    Matrix coef = Matrix::Zero(n, h);
    Vector bias = Vector::Zero(h);
    Vector norms = residual_norms(gram, targets, coef, bias);
    double objective = objective_from_norms(gram, coef, norms, params.C, params.epsilon);

    MsvrFit fit;
    fit.trace.objective.push_back(objective);

    for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
        std::vector<Eigen::Index> active;
        Vector weights(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            // u = eps sits on the zero branch of the weight formula.
            if (norms(i) > params.epsilon) {
                active.push_back(i);
                weights(static_cast<Eigen::Index>(active.size() - 1)) =
                    2.0 * params.C * (norms(i) - params.epsilon) / norms(i);
            }
        }
        if (active.empty()) {
            fit.trace.converged = true;
            break;
        }
        const auto m = static_cast<Eigen::Index>(active.size());
        const Matrix gram_active = gram(active, active);
        const Matrix y_active = targets(active, Eigen::all);
        const Vector w_active = weights.head(m);

        auto step = solve_weighted(gram_active, w_active, y_active, 0.0);
        if (!step) {
            fit.trace.ridge_used = true;
            step = solve_weighted(gram_active, w_active, y_active, ridge);
            if (!step) {
                throw std::runtime_error("train_msvr: weighted system is singular even after ridge");
            }
        }

        Matrix target_coef = Matrix::Zero(n, h);
        target_coef(active, Eigen::all) = step->coefficients;
        const Matrix dir_coef = target_coef - coef;
        const Vector dir_bias = step->biases - bias;

        // Backtracking: halve until the true objective decreases.
        double eta = 1.0;
        bool accepted = false;
        Matrix trial_coef;
        Vector trial_bias;
        Vector trial_norms;
        double trial_objective = objective;
        while (eta > 1e-12) {
            trial_coef = coef + eta * dir_coef;
            trial_bias = bias + eta * dir_bias;
            trial_norms = residual_norms(gram, targets, trial_coef, trial_bias);
            trial_objective = objective_from_norms(gram, trial_coef, trial_norms, params.C, params.epsilon);
            if (trial_objective < objective) {
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        fit.trace.iterations = iter + 1;
        if (!accepted) {
            fit.trace.converged = true;
            break;
        }
        const double previous = objective;
        coef = std::move(trial_coef);
        bias = std::move(trial_bias);
        norms = std::move(trial_norms);
        objective = trial_objective;
        fit.trace.objective.push_back(objective);
        if (observer) {
            observer(coef, bias);
        }
        if (previous <= 0.0 || (previous - objective) / previous < params.tolerance) {
            fit.trace.converged = true;
            break;
        }
    }

    auto& model = fit.model;
    model.gamma = params.gamma;
    model.epsilon = params.epsilon;
    model.C = params.C;
    model.biases = bias;
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!coef.row(i).isZero(0.0)) {
            support.push_back(i);
        }
    }
    model.support_inputs = inputs(support, Eigen::all);
    model.coefficient_matrix = coef(support, Eigen::all);
    return fit;
}

std::vector<double> predict_msvr(const MsvrModel& model, std::span<const double> x)
{
    if (model.support_inputs.cols() > 0 && x.size() != model.input_dim()) {
        throw DimensionError("predict_msvr: expected " + std::to_string(model.input_dim()) + " inputs, got " +
                             std::to_string(x.size()));
    }
    Vector out = model.biases;
    if (model.support_inputs.rows() > 0) {
        out += model.coefficient_matrix.transpose() * rbf_row(model.support_inputs, x, model.gamma);
    }
    return {out.data(), out.data() + out.size()};
}

} // namespace flucast::models
