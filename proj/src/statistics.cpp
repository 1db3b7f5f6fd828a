#include "flucast/statistics.hpp"

#include "flucast/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace flucast::evaluation {

namespace {

constexpr int kMaxTerms = 10000;
constexpr double kRelTol = 1e-16;

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x)
{
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < kMaxTerms; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kRelTol) {
            break;
        }
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_q_fraction(double a, double x)
{
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxTerms; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = b + an / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kRelTol) {
            break;
        }
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Demsar (2006), Table 5(a): studentized range q_0.05(K, inf) / sqrt(2), K = 2..10.
constexpr std::array<double, 9> kNemenyiQ05{1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};

} // namespace

std::vector<double> rank_row(std::span<const double> values)
{
    const std::size_t k = values.size();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(k);
    std::size_t i = 0;
    while (i < k) {
        std::size_t j = i;
        while (j + 1 < k && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            ranks[order[t]] = shared;
        }
        i = j + 1;
    }
    return ranks;
}

double regularized_gamma_p(double a, double x)
{
    if (!(a > 0.0) || x < 0.0) {
        throw std::domain_error("regularized_gamma_p: require a > 0, x >= 0");
    }
    if (x == 0.0) {
        return 0.0;
    }
    return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x)
{
    if (!(a > 0.0) || x < 0.0) {
        throw std::domain_error("regularized_gamma_q: require a > 0, x >= 0");
    }
    if (x == 0.0) {
        return 1.0;
    }
    return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_fraction(a, x);
}

double chi_square_sf(double x, double dof)
{
    if (!(dof > 0.0)) {
        throw std::domain_error("chi_square_sf: degrees of freedom must be positive");
    }
    if (x <= 0.0) {
        return 1.0;
    }
    return regularized_gamma_q(0.5 * dof, 0.5 * x);
}

FriedmanResult friedman_test(const std::vector<std::vector<double>>& scores)
{
    const std::size_t n = scores.size();
    if (n < 2) {
        throw std::invalid_argument("friedman_test: need at least 2 blocks");
    }
    const std::size_t k = scores.front().size();
    if (k < 2) {
        throw std::invalid_argument("friedman_test: need at least 2 treatments");
    }
    FriedmanResult result;
    result.blocks = n;
    result.treatments = k;
    result.mean_ranks.assign(k, 0.0);
    for (const auto& row : scores) {
        if (row.size() != k) {
            throw DimensionError("friedman_test: ragged score matrix");
        }
        for (double v : row) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("friedman_test: non-finite score");
            }
        }
        const auto ranks = rank_row(row);
        for (std::size_t j = 0; j < k; ++j) {
            result.mean_ranks[j] += ranks[j];
        }
    }
    const auto N = static_cast<double>(n);
    const auto K = static_cast<double>(k);
    double sum_sq = 0.0;
    for (auto& r : result.mean_ranks) {
        r /= N;
        sum_sq += r * r;
    }
    const double stat = 12.0 * N / (K * (K + 1.0)) * (sum_sq - K * (K + 1.0) * (K + 1.0) / 4.0);
    result.statistic = std::max(0.0, stat);
    result.p_value = chi_square_sf(result.statistic, K - 1.0);
    return result;
}

double nemenyi_q(std::size_t treatments, double alpha)
{
    if (alpha != 0.05) {
        throw std::invalid_argument("nemenyi_q: only alpha = 0.05 is tabulated");
    }
    if (treatments < 2 || treatments > 10) {
        throw std::out_of_range("nemenyi_q: K = " + std::to_string(treatments) + " outside the table (2..10)");
    }
    return kNemenyiQ05[treatments - 2];
}

double nemenyi_critical_difference(std::size_t treatments, std::size_t blocks, double alpha)
{
    if (blocks < 2) {
        throw std::invalid_argument("nemenyi_critical_difference: need at least 2 blocks");
    }
    const auto K = static_cast<double>(treatments);
    return nemenyi_q(treatments, alpha) * std::sqrt(K * (K + 1.0) / (6.0 * static_cast<double>(blocks)));
}

std::vector<std::vector<bool>> nemenyi_significance(std::span<const double> mean_ranks, double cd)
{
    const std::size_t k = mean_ranks.size();
    std::vector<std::vector<bool>> out(k, std::vector<bool>(k, false));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            out[i][j] = i != j && std::abs(mean_ranks[i] - mean_ranks[j]) >= cd;
        }
    }
    return out;
}

} // namespace flucast::evaluation
