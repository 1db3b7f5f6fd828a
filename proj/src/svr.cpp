#include "flucast/svr.hpp"

#include "flucast/errors.hpp"
#include "flucast/kernel.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace flucast::models {

namespace {

constexpr double kTau = 1e-12;

// Variables t < n are alpha_i (label +1), t >= n are alpha*_i (label -1).
class SmoSolver {
public:
    SmoSolver(const Matrix& gram, std::span<const double> y, double C, double epsilon)
        : gram_(gram), y_(y), n_(y.size()), C_(C), epsilon_(epsilon), alpha_(2 * y.size(), 0.0), grad_(2 * y.size()), diag_(gram.diagonal().array()),
          work_pos_(y.size()), work_neg_(y.size()), max2_pos_(y.size()), max2_neg_(y.size())
    {
        for (std::size_t i = 0; i < n_; ++i) {
            grad_[i] = epsilon - y[i];
            grad_[i + n_] = epsilon + y[i];
        }
    }

    bool run(double tolerance, std::size_t max_iterations, std::size_t& iterations)
    {
        iterations = 0;
        while (iterations < max_iterations) {
            std::size_t i = 0;
            std::size_t j = 0;
            if (select_working_set(tolerance, i, j)) {
                return true;
            }
            update_pair(i, j);
            ++iterations;
        }
        return false;
    }

    // Exact solve on the free set with the bound set frozen. SMO stops at a KKT gap, which
    // can leave a visible objective gap; when the active set is already right this closes it.
    // The result is kept only if it preserves signs and box bounds and lowers the objective.
    void polish()
    {
        const Vector beta = coefficients();
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < beta.size(); ++i) {
            if (beta(i) != 0.0 && std::abs(beta(i)) < C_) {
                free.push_back(i);
            }
        }
        if (free.empty()) {
            return;
        }
        const auto nf = static_cast<Eigen::Index>(free.size());
        Matrix system = Matrix::Zero(nf + 1, nf + 1);
        Vector rhs(nf + 1);
        Vector bounded = beta;
        for (Eigen::Index a = 0; a < nf; ++a) {
            bounded(free[static_cast<std::size_t>(a)]) = 0.0;
        }
        const Vector pull = gram_ * bounded;
        for (Eigen::Index a = 0; a < nf; ++a) {
            const Eigen::Index i = free[static_cast<std::size_t>(a)];
            for (Eigen::Index b = 0; b < nf; ++b) {
                system(a, b) = gram_(i, free[static_cast<std::size_t>(b)]);
            }
            system(a, nf) = 1.0;
            system(nf, a) = 1.0;
            rhs(a) = y_[static_cast<std::size_t>(i)] - epsilon_ * (beta(i) > 0.0 ? 1.0 : -1.0) - pull(i);
        }
        rhs(nf) = -bounded.sum();
        const Eigen::FullPivLU<Matrix> lu(system);
        if (!lu.isInvertible()) {
            return;
        }
        const Vector sol = lu.solve(rhs);
        Vector candidate = bounded;
        for (Eigen::Index a = 0; a < nf; ++a) {
            const Eigen::Index i = free[static_cast<std::size_t>(a)];
            const double v = sol(a);
            if (!std::isfinite(v) || v * beta(i) <= 0.0 || std::abs(v) > C_) {
                return;
            }
            candidate(i) = v;
        }
        if (!(objective(candidate) < objective(beta))) {
            return;
        }
        for (std::size_t i = 0; i < n_; ++i) {
            const double v = candidate(static_cast<Eigen::Index>(i));
            alpha_[i] = std::max(v, 0.0);
            alpha_[i + n_] = std::max(-v, 0.0);
        }
        const Vector k_beta = gram_ * candidate;
        for (std::size_t i = 0; i < n_; ++i) {
            const double kb = k_beta(static_cast<Eigen::Index>(i));
            grad_[i] = kb + epsilon_ - y_[i];
            grad_[i + n_] = -kb + epsilon_ + y_[i];
        }
    }

    double bias() const
    {
        double ub = std::numeric_limits<double>::infinity();
        double lb = -std::numeric_limits<double>::infinity();
        double sum_free = 0.0;
        std::size_t n_free = 0;
        for (std::size_t t = 0; t < 2 * n_; ++t) {
            const double yg = label(t) * grad_[t];
            if (at_upper(t)) {
                if (label(t) < 0) {
                    ub = std::min(ub, yg);
                } else {
                    lb = std::max(lb, yg);
                }
            } else if (at_lower(t)) {
                if (label(t) > 0) {
                    ub = std::min(ub, yg);
                } else {
                    lb = std::max(lb, yg);
                }
            } else {
                ++n_free;
                sum_free += yg;
            }
        }
        const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
        return -rho;
    }

    Vector coefficients() const
    {
        Vector coef(static_cast<Eigen::Index>(n_));
        for (std::size_t i = 0; i < n_; ++i) {
            coef(static_cast<Eigen::Index>(i)) = alpha_[i] - alpha_[i + n_];
        }
        return coef;
    }

private:
    double objective(const Vector& beta) const
    {
        double lin = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double b = beta(static_cast<Eigen::Index>(i));
            lin += epsilon_ * std::abs(b) - y_[i] * b;
        }
        return 0.5 * beta.dot(gram_ * beta) + lin;
    }

    double label(std::size_t t) const { return t < n_ ? 1.0 : -1.0; }
    std::size_t point(std::size_t t) const { return t < n_ ? t : t - n_; }
    bool at_upper(std::size_t t) const { return alpha_[t] >= C_; }
    bool at_lower(std::size_t t) const { return alpha_[t] <= 0.0; }
    double kernel(std::size_t s, std::size_t t) const
    {
        return gram_(static_cast<Eigen::Index>(point(s)), static_cast<Eigen::Index>(point(t)));
    }
    // Signed Q_st = y_s y_t K.
    double q(std::size_t s, std::size_t t) const { return label(s) * label(t) * kernel(s, t); }

    // Last index holding `value`, or -1.
    static std::ptrdiff_t last_index_of(const Eigen::ArrayXd& a, double value)
    {
        for (Eigen::Index p = a.size() - 1; p >= 0; --p) {
            if (a(p) == value) {
                return static_cast<std::ptrdiff_t>(p);
            }
        }
        return -1;
    }

    // Second-order working set selection. The halves are reduced with vector max/min and
    // ties go to the last variable in alpha, alpha* order, as in one sequential scan
    // with >= / <= comparisons. For either half K_ii + K_tt - 2 y_i Q_it = K_ii + K_pp - 2 K_ip.
    bool select_working_set(double tolerance, std::size_t& out_i, std::size_t& out_j)
    {
        constexpr double kInf = std::numeric_limits<double>::infinity();
        const std::size_t n = n_;
        const double* g_pos = grad_.data();
        const double* g_neg = g_pos + n;
        const double* a_pos = alpha_.data();
        const double* a_neg = a_pos + n;
        double* w_pos = work_pos_.data();
        double* w_neg = work_neg_.data();
        const double c = C_;

        // Plain ternary loops vectorise to blends; the reductions use Eigen's packet max/min.
        for (std::size_t p = 0; p < n; ++p) {
            w_pos[p] = a_pos[p] < c ? -g_pos[p] : -kInf;
            w_neg[p] = a_neg[p] > 0.0 ? g_neg[p] : -kInf;
        }
        const double max_pos = work_pos_.maxCoeff();
        const double max_neg = work_neg_.maxCoeff();
        const double gmax = std::max(max_pos, max_neg);
        if (gmax == -kInf) {
            return true;
        }
        const std::size_t i = max_neg >= max_pos
                                  ? static_cast<std::size_t>(last_index_of(work_neg_, max_neg)) + n
                                  : static_cast<std::size_t>(last_index_of(work_pos_, max_pos));

        const double* k_i = gram_.row(static_cast<Eigen::Index>(point(i))).data();
        const double qii = k_i[point(i)];
        const double* diag = diag_.data();
        double* m_pos = max2_pos_.data();
        double* m_neg = max2_neg_.data();
        for (std::size_t p = 0; p < n; ++p) {
            const double raw = qii + diag[p] - 2.0 * k_i[p];
            const double quad = raw > 0.0 ? raw : kTau;
            const double d_pos = gmax + g_pos[p];
            const double d_neg = gmax - g_neg[p];
            const bool free_pos = a_pos[p] > 0.0;
            const bool free_neg = a_neg[p] < c;
            m_pos[p] = free_pos ? g_pos[p] : -kInf;
            m_neg[p] = free_neg ? -g_neg[p] : -kInf;
            w_pos[p] = free_pos && d_pos > 0.0 ? -(d_pos * d_pos) / quad : kInf;
            w_neg[p] = free_neg && d_neg > 0.0 ? -(d_neg * d_neg) / quad : kInf;
        }
        const double gmax2 = std::max(max2_pos_.maxCoeff(), max2_neg_.maxCoeff());
        const double min_pos = work_pos_.minCoeff();
        const double min_neg = work_neg_.minCoeff();

        if (gmax + gmax2 < tolerance || std::min(min_pos, min_neg) == kInf) {
            return true;
        }
        out_i = i;
        out_j = min_neg <= min_pos ? static_cast<std::size_t>(last_index_of(work_neg_, min_neg)) + n
                                   : static_cast<std::size_t>(last_index_of(work_pos_, min_pos));
        return false;
    }

    void update_pair(std::size_t i, std::size_t j)
    {
        const double old_ai = alpha_[i];
        const double old_aj = alpha_[j];
        const double qii = kernel(i, i);
        const double qjj = kernel(j, j);
        const double qij = q(i, j);
        double& ai = alpha_[i];
        double& aj = alpha_[j];

        if (label(i) != label(j)) {
            double quad = qii + qjj + 2.0 * qij;
            if (quad <= 0.0) {
                quad = kTau;
            }
            const double delta = (-grad_[i] - grad_[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) {
                    aj = 0.0;
                    ai = diff;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = -diff;
            }
            if (diff > 0.0) {
                if (ai > C_) {
                    ai = C_;
                    aj = C_ - diff;
                }
            } else if (aj > C_) {
                aj = C_;
                ai = C_ + diff;
            }
        } else {
            double quad = qii + qjj - 2.0 * qij;
            if (quad <= 0.0) {
                quad = kTau;
            }
            const double delta = (grad_[i] - grad_[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > C_) {
                if (ai > C_) {
                    ai = C_;
                    aj = sum - C_;
                }
                if (aj > C_) {
                    aj = C_;
                    ai = sum - C_;
                }
            } else {
                if (aj < 0.0) {
                    aj = 0.0;
                    ai = sum;
                }
                if (ai < 0.0) {
                    ai = 0.0;
                    aj = sum;
                }
            }
        }

        const double dai = ai - old_ai;
        const double daj = aj - old_aj;
        // Q_it = y_i y_t K_ip: the alpha* half receives the negated update.
        const double* k_i = gram_.row(static_cast<Eigen::Index>(point(i))).data();
        const double* k_j = gram_.row(static_cast<Eigen::Index>(point(j))).data();
        const double si = label(i) * dai;
        const double sj = label(j) * daj;
        double* g_pos = grad_.data();
        double* g_neg = g_pos + n_;
        for (std::size_t p = 0; p < n_; ++p) {
            const double u = k_i[p] * si + k_j[p] * sj;
            g_pos[p] += u;
            g_neg[p] -= u;
        }
    }

    const Matrix& gram_;
    std::span<const double> y_;
    std::size_t n_;
    double C_;
    double epsilon_;
    std::vector<double> alpha_;
    std::vector<double> grad_;
    Eigen::ArrayXd diag_;
    Eigen::ArrayXd work_pos_;
    Eigen::ArrayXd work_neg_;
    Eigen::ArrayXd max2_pos_;
    Eigen::ArrayXd max2_neg_;
};

void check_finite(const Matrix& inputs, std::span<const double> targets)
{
    if (!inputs.allFinite()) {
        throw std::invalid_argument("SVR inputs contain non-finite values");
    }
    for (double v : targets) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("SVR targets contain non-finite values");
        }
    }
}

} // namespace

SvrDualSolution solve_svr_dual(const Matrix& gram, std::span<const double> targets, double C, double epsilon,
                               double tolerance, std::size_t max_iterations)
{
    if (gram.rows() != gram.cols() || static_cast<std::size_t>(gram.rows()) != targets.size()) {
        throw DimensionError("solve_svr_dual: Gram matrix does not match targets");
    }
    SmoSolver solver(gram, targets, C, epsilon);
    SvrDualSolution out;
    out.converged = solver.run(tolerance, max_iterations, out.iterations);
    if (out.converged) {
        solver.polish();
    }
    out.coefficients = solver.coefficients();
    out.bias = solver.bias();
    return out;
}

double svr_dual_objective(const Matrix& gram, std::span<const double> targets, const Vector& coefficients,
                          double epsilon)
{
    const Eigen::Map<const Vector> y(targets.data(), static_cast<Eigen::Index>(targets.size()));
    return 0.5 * coefficients.dot(gram * coefficients) - y.dot(coefficients) +
           epsilon * coefficients.cwiseAbs().sum();
}

SvrModel train_svr(const Matrix& inputs, std::span<const double> targets, const SvrParams& params)
{
    if (!(params.gamma > 0.0)) {
        throw std::invalid_argument("train_svr: gamma must be positive");
    }
    return train_svr(inputs, rbf_gram(inputs, params.gamma), targets, params);
}

SvrModel train_svr(const Matrix& inputs, const Matrix& gram, std::span<const double> targets,
                   const SvrParams& params)
{
    if (inputs.rows() == 0) {
        throw std::invalid_argument("train_svr: empty training set");
    }
    if (static_cast<std::size_t>(inputs.rows()) != targets.size() || gram.rows() != inputs.rows()) {
        throw DimensionError("train_svr: input rows do not match targets");
    }
    if (!(params.C > 0.0) || !(params.epsilon >= 0.0) || !(params.gamma > 0.0)) {
        throw std::invalid_argument("train_svr: require C > 0, epsilon >= 0, gamma > 0");
    }
    check_finite(inputs, targets);

    const std::size_t n = targets.size();
    const auto solution =
        solve_svr_dual(gram, targets, params.C, params.epsilon, params.tolerance, 10 * n * 1000);

    SvrModel model;
    model.gamma = params.gamma;
    model.epsilon = params.epsilon;
    model.C = params.C;
    model.bias = solution.bias;
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < solution.coefficients.size(); ++i) {
        if (solution.coefficients(i) != 0.0) {
            support.push_back(i);
        }
    }
    model.support_inputs = inputs(support, Eigen::all);
    model.dual_coefficients.reserve(support.size());
    for (auto i : support) {
        model.dual_coefficients.push_back(solution.coefficients(i));
    }
    return model;
}

double predict_svr(const SvrModel& model, std::span<const double> x)
{
    if (model.support_inputs.cols() > 0 && x.size() != model.input_dim()) {
        throw DimensionError("predict_svr: expected " + std::to_string(model.input_dim()) + " inputs, got " +
                             std::to_string(x.size()));
    }
    double out = model.bias;
    for (Eigen::Index i = 0; i < model.support_inputs.rows(); ++i) {
        out += model.dual_coefficients[static_cast<std::size_t>(i)] *
               rbf_kernel(row_span(model.support_inputs, i), x, model.gamma);
    }
    return out;
}

} // namespace flucast::models
