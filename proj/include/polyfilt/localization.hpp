#pragma once

#include "polyfilt/core.hpp"

namespace polyfilt {

/// Gaussian decorrelation weights exp(-d^2 / (2 r^2)) on a cyclic grid with
/// d(i, j) = min(|i - j|, n - |i - j|). Applied by Schur product.
Matrix localization_matrix(Index n, double radius);

/// Column mean of an n x N member matrix.
Vector ensemble_mean(const Matrix& members);

/// Unbiased (1 / (N - 1)) sample covariance of an n x N member matrix.
Matrix ensemble_covariance(const Matrix& members);

}  // namespace polyfilt
