#include "polyfilt/localization.hpp"

#include <cmath>
#include <cstdlib>

namespace polyfilt {

Matrix localization_matrix(Index n, double radius) {
  require(n >= 1, Errc::invalid_argument, "localization_matrix: n must be positive");
  require(radius > 0.0, Errc::invalid_argument, "localization_matrix: radius must be positive");
  Matrix rho(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const Index gap = std::abs(i - j);
      const double d = static_cast<double>(std::min(gap, n - gap));
      rho(i, j) = std::exp(-d * d / (2.0 * radius * radius));
    }
  }
  return rho;
}

Vector ensemble_mean(const Matrix& members) {
  require(members.cols() >= 1, Errc::invalid_argument, "ensemble_mean: empty ensemble");
  return members.rowwise().mean();
}

Matrix ensemble_covariance(const Matrix& members) {
  require(members.cols() >= 2, Errc::invalid_argument, "ensemble_covariance: need N >= 2");
  const Matrix anomalies = members.colwise() - members.rowwise().mean();
  Matrix cov = anomalies * anomalies.transpose() / static_cast<double>(members.cols() - 1);
  return 0.5 * (cov + cov.transpose());
}

}  // namespace polyfilt
