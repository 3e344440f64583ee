#pragma once

#include <Eigen/Dense>

namespace permchol {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Floor applied to every residual variance d_j^2.
inline constexpr double kVarianceFloor = 1e-8;

}  // namespace permchol
