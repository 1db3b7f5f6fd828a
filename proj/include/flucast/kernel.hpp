#pragma once

#include "flucast/linalg.hpp"

#include <span>

namespace flucast::models {

/// exp(-gamma * ||x - y||^2).
double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

/// Symmetric Gram matrix over the rows of `inputs`.
Matrix rbf_gram(const Matrix& inputs, double gamma);

/// Kernel values between `x` and every row of `support`.
Vector rbf_row(const Matrix& support, std::span<const double> x, double gamma);

} // namespace flucast::models
