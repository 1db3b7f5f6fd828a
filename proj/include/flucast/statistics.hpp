#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace flucast::evaluation {

/// Ascending ranks starting at 1; tied values share their average rank.
std::vector<double> rank_row(std::span<const double> values);

/// Regularised lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
/// Regularised upper incomplete gamma Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double dof);

struct FriedmanResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::vector<double> mean_ranks;
    std::size_t blocks = 0;      // N
    std::size_t treatments = 0;  // K
};

/// Friedman rank test over an N x K score matrix (rows are blocks). Lower scores rank first.
///
/// chi2_F = 12 N / (K (K + 1)) * (sum_j R_j^2 - K (K + 1)^2 / 4), R_j the mean ranks,
/// with a chi-square(K - 1) p-value.
FriedmanResult friedman_test(const std::vector<std::vector<double>>& scores);

/// Two-tailed Nemenyi critical value q_alpha for K treatments; alpha = 0.05, K in 2..10.
double nemenyi_q(std::size_t treatments, double alpha = 0.05);

/// CD = q_alpha * sqrt(K (K + 1) / (6 N)).
double nemenyi_critical_difference(std::size_t treatments, std::size_t blocks, double alpha = 0.05);

/// Pairwise flags: |R_i - R_j| >= cd.
std::vector<std::vector<bool>> nemenyi_significance(std::span<const double> mean_ranks, double cd);

} // namespace flucast::evaluation
