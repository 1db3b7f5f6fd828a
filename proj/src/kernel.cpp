#include "flucast/kernel.hpp"

#include "flucast/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace flucast::models {

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma)
{
    if (x.size() != y.size()) {
        throw DimensionError("rbf_kernel: dimension mismatch");
    }
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("rbf_kernel: gamma must be positive");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - y[i];
        sq += diff * diff;
    }
    return std::exp(-gamma * sq);
}

Matrix rbf_gram(const Matrix& inputs, double gamma)
{
    const Eigen::Index n = inputs.rows();
    Matrix gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        gram(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double k = std::exp(-gamma * (inputs.row(i) - inputs.row(j)).squaredNorm());
            gram(i, j) = k;
            gram(j, i) = k;
        }
    }
    return gram;
}

Vector rbf_row(const Matrix& support, std::span<const double> x, double gamma)
{
    if (static_cast<std::size_t>(support.cols()) != x.size()) {
        throw DimensionError("rbf_row: dimension mismatch");
    }
    const auto xr = as_row(x);
    Vector out(support.rows());
    for (Eigen::Index i = 0; i < support.rows(); ++i) {
        out(i) = std::exp(-gamma * (support.row(i) - xr).squaredNorm());
    }
    return out;
}

} // namespace flucast::models
