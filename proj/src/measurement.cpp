#include "polyfilt/measurement.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace polyfilt {

namespace {

Eigen::LLT<Matrix> spd_cholesky(const Matrix& cov, const char* what) {
  Eigen::LLT<Matrix> chol(symmetrized(cov, 1e-10));
  require(chol.info() == Eigen::Success, Errc::not_spd, what);
  return chol;
}

double log_det(const Eigen::LLT<Matrix>& chol) {
  return 2.0 * chol.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

double gaussian_log_pdf(const Vector& x, const Eigen::LLT<Matrix>& chol) {
  const Vector z = chol.matrixL().solve(x);
  const double m = static_cast<double>(x.size());
  return -0.5 * (z.squaredNorm() + log_det(chol) + m * std::log(2.0 * std::numbers::pi));
}

void validate(const MeasurementModel& model) {
  require(static_cast<bool>(model.h) && static_cast<bool>(model.jacobian), Errc::invalid_argument,
          "measurement model needs h and its Jacobian");
  require(model.state_dim >= 1 && model.meas_dim >= 1, Errc::invalid_argument,
          "measurement model dimensions must be positive");
  const Index m = model.meas_dim;
  std::visit(
      [m](const auto& noise) {
        using T = std::decay_t<decltype(noise)>;
        if constexpr (std::is_same_v<T, GaussianNoise>) {
          require(noise.cov.rows() == m && noise.cov.cols() == m, Errc::dimension_mismatch,
                  "Gaussian noise covariance must be m x m");
          spd_cholesky(noise.cov, "Gaussian noise covariance must be SPD");
        } else if constexpr (std::is_same_v<T, UniformPolytopeNoise>) {
          require(noise.region.dim() == m, Errc::dimension_mismatch, "noise polytope must live in R^m");
        } else {
          require(!noise.terms.empty(), Errc::invalid_argument, "mixture noise has no terms");
          double total = 0.0;
          for (const MixtureTerm& t : noise.terms) {
            require(t.weight >= 0.0, Errc::invalid_argument, "mixture weight negative");
            require(t.mean.size() == m && t.cov.rows() == m && t.cov.cols() == m,
                    Errc::dimension_mismatch, "mixture term shape");
            spd_cholesky(t.cov, "mixture covariance must be SPD");
            total += t.weight;
          }
          require(std::abs(total - 1.0) <= 1e-12, Errc::invalid_argument,
                  "mixture weights must sum to one");
        }
      },
      model.noise);
}

NoiseDensity::NoiseDensity(const NoiseModel& noise) {
  if (const auto* g = std::get_if<GaussianNoise>(&noise)) {
    Term t{0.0, Vector::Zero(g->cov.rows()), KernelShape::gaussian,
           spd_cholesky(g->cov, "noise covariance must be SPD"), 0.0, std::nullopt};
    terms_.push_back(std::move(t));
  } else if (const auto* u = std::get_if<UniformPolytopeNoise>(&noise)) {
    region_ = u->region;
  } else {
    const auto& mix = std::get<MixtureNoise>(noise);
    for (const MixtureTerm& term : mix.terms) {
      if (term.weight <= 0.0) continue;
      Term t{std::log(term.weight), term.mean, term.shape,
             spd_cholesky(term.cov, "mixture covariance must be SPD"), 0.0, std::nullopt};
      if (term.shape == KernelShape::uniform) {
        const double m = static_cast<double>(term.mean.size());
        t.log_norm = -(0.5 * m * std::log(12.0) + 0.5 * log_det(t.chol));
        t.box = covariance_cube(term.mean, term.cov).polytope;
      }
      terms_.push_back(std::move(t));
    }
  }
}

double NoiseDensity::log_pdf(const Vector& residual) const {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (region_) return contains(*region_, residual) ? 0.0 : kNegInf;
  double peak = kNegInf;
  std::vector<double> logs;
  logs.reserve(terms_.size());
  for (const Term& t : terms_) {
    double value = kNegInf;
    if (t.shape == KernelShape::gaussian) {
      value = t.log_weight + gaussian_log_pdf(residual - t.mean, t.chol);
    } else if (contains(*t.box, residual)) {
      value = t.log_weight + t.log_norm;
    }
    logs.push_back(value);
    peak = std::max(peak, value);
  }
  if (logs.size() == 1 || !std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double v : logs) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

const Matrix& gaussian_cov(const MeasurementModel& model) {
  const auto* g = std::get_if<GaussianNoise>(&model.noise);
  require(g != nullptr, Errc::invalid_argument, "measurement noise is not Gaussian");
  return g->cov;
}

}  // namespace polyfilt
