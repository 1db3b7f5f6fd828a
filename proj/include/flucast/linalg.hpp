#pragma once

#include <Eigen/Dense>

#include <span>

namespace flucast {

/// Row-major so that each sample row is a contiguous span.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline std::span<const double> row_span(const Matrix& m, Eigen::Index r)
{
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline Eigen::Map<const Eigen::RowVectorXd> as_row(std::span<const double> x)
{
    return {x.data(), static_cast<Eigen::Index>(x.size())};
}

} // namespace flucast
