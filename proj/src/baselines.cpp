#include "polyfilt/baselines.hpp"

#include "polyfilt/exact_filters.hpp"
#include "polyfilt/localization.hpp"

#include <cmath>
#include <limits>

namespace polyfilt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Matrix localized(Matrix cov, const BaselineConfig& cfg) {
  if (cfg.localization_radius) cov = cov.cwiseProduct(localization_matrix(cov.rows(), *cfg.localization_radius));
  return cov;
}

/// Log weights -> probabilities with the defensive floor. When every
/// likelihood underflows the floor alone remains, i.e. uniform weights.
std::vector<double> defensive_weights(const std::vector<double>& logw, double d_f) {
  double peak = kNegInf;
  for (double v : logw) {
    require(!std::isnan(v), Errc::non_finite, "likelihood weight is NaN");
    peak = std::max(peak, v);
  }
  const size_t N = logw.size();
  std::vector<double> w(N, 1.0 / static_cast<double>(N));
  if (std::isfinite(peak)) {
    double total = 0.0;
    for (size_t i = 0; i < N; ++i) {
      w[i] = std::exp(logw[i] - peak);
      total += w[i];
    }
    for (double& v : w) v /= total;
  } else if (d_f <= 0.0) {
    throw Error(Errc::weights_degenerate, "all particle weights vanished");
  }
  return apply_defensive_factor(std::move(w), d_f);
}

/// Lower factor L with L L^T = S; falls back to V sqrt(Lambda) for singular S.
Matrix sampling_factor(const Matrix& S) {
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  return matrix_sqrt(0.5 * (S + S.transpose()));
}

}  // namespace

void validate(const BaselineConfig& cfg) {
  require(cfg.inflation >= 1.0, Errc::invalid_argument, "inflation must be at least 1");
  require(!cfg.localization_radius || *cfg.localization_radius > 0.0, Errc::invalid_argument,
          "localization radius must be positive");
  require(cfg.defensive >= 0.0 && cfg.defensive <= 1.0, Errc::invalid_argument,
          "defensive factor must lie in [0, 1]");
}

Ensemble enkf_step(const Ensemble& ens, const MeasurementModel& model, const Vector& y,
                   const BaselineConfig& cfg) {
  validate(ens);
  validate(cfg);
  const Matrix& R = gaussian_cov(model);
  const Index N = ens.size();
  const Vector mean = ensemble_mean(ens.members);
  Matrix anomalies = (ens.members.colwise() - mean) * cfg.inflation;

  Vector new_mean;
  if (cfg.enkf_gain == EnkfGainMode::linearized || cfg.localization_radius) {
    const Matrix cov = localized(anomalies * anomalies.transpose() / static_cast<double>(N - 1), cfg);
    const Matrix H = model.jacobian(mean);
    const Gains g = compute_gains(cov, H, R);
    new_mean = mean + g.K * (y - model.h(mean));
    anomalies -= g.K_tilde * (H * anomalies);
  } else {
    const Index m = model.meas_dim;
    Matrix mapped(m, N);
    for (Index i = 0; i < N; ++i) mapped.col(i) = model.h(mean + anomalies.col(i));
    const Vector mapped_mean = mapped.rowwise().mean();
    const Matrix mapped_anom = mapped.colwise() - mapped_mean;
    const double scale = 1.0 / static_cast<double>(N - 1);
    const Matrix Pxy = anomalies * mapped_anom.transpose() * scale;
    Matrix S = mapped_anom * mapped_anom.transpose() * scale + R;
    S = 0.5 * (S + S.transpose());
    // Same square-root correction as compute_gains, with the sample S.
    const Matrix r_half = symmetric_sqrt(R);
    const Matrix r_half_inv = r_half.inverse();
    const Matrix whitened = r_half_inv * S * r_half_inv;
    const Matrix root = r_half * symmetric_sqrt(0.5 * (whitened + whitened.transpose())) * r_half;
    Eigen::LLT<Matrix> chol(S);
    Eigen::LLT<Matrix> chol_mod(S + 0.5 * (root + root.transpose()));
    require(chol.info() == Eigen::Success && chol_mod.info() == Eigen::Success, Errc::ill_conditioned,
            "enkf_step: innovation covariance not invertible");
    const Matrix K = chol.solve(Pxy.transpose()).transpose();
    const Matrix K_tilde = chol_mod.solve(Pxy.transpose()).transpose();
    new_mean = mean + K * (y - mapped_mean);
    anomalies -= K_tilde * mapped_anom;
  }
  Ensemble out{anomalies.colwise() + new_mean};
  require(out.members.allFinite(), Errc::non_finite, "enkf_step produced non-finite members");
  return out;
}

Ensemble bpf_step(const Ensemble& ens, const MeasurementModel& model, const Vector& y,
                  const BaselineConfig& cfg, RngStream& rng) {
  validate(ens);
  validate(cfg);
  const Index n = ens.dim();
  const Index N = ens.size();
  Matrix particles = ens.members;
  if (cfg.process_noise_cov) {
    require(cfg.process_noise_cov->rows() == n && cfg.process_noise_cov->cols() == n,
            Errc::dimension_mismatch, "bpf_step: process noise shape");
    const Matrix L = sampling_factor(*cfg.process_noise_cov);
    for (Index i = 0; i < N; ++i) particles.col(i) += L * rng.normal_vector(n);
  }
  const NoiseDensity density(model.noise);
  std::vector<double> logw(static_cast<size_t>(N));
  for (Index i = 0; i < N; ++i) logw[static_cast<size_t>(i)] = density.log_pdf(y - model.h(particles.col(i)));
  const std::vector<double> w = defensive_weights(logw, cfg.defensive);
  const std::vector<Index> picks = categorical_resample(w, N, rng);
  Ensemble out{Matrix(n, N)};
  for (Index k = 0; k < N; ++k) out.members.col(k) = particles.col(picks[static_cast<size_t>(k)]);
  return out;
}

double silverman_gaussian_bandwidth(Index n, Index N) {
  require(n >= 1 && N >= 2, Errc::invalid_argument, "silverman bandwidth needs n >= 1, N >= 2");
  const double nd = static_cast<double>(n);
  return std::pow(4.0 / ((nd + 2.0) * static_cast<double>(N)), 1.0 / (nd + 4.0));
}

GaussianMixture engmf_analysis(const Ensemble& ens, const MeasurementModel& model, const Vector& y,
                               const BaselineConfig& cfg) {
  validate(ens);
  validate(cfg);
  const Matrix& R = gaussian_cov(model);
  const Index n = ens.dim();
  const Index N = ens.size();

  Matrix cov = localized(ensemble_covariance(ens.members), cfg);
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(cov, Eigen::EigenvaluesOnly).eigenvalues();
  if (ev.minCoeff() <= 1e-12 * std::max(ev.maxCoeff(), 0.0)) {
    require(cov.trace() > 0.0, Errc::degenerate, "engmf: ensemble covariance is zero");
    cov += (1e-10 * cov.trace() / static_cast<double>(n)) * Matrix::Identity(n, n);
  }
  const double h = silverman_gaussian_bandwidth(n, N);
  const Matrix B = h * h * cov;

  // Kernels differ only in the linearization point, so the factorizations
  // are reused while H does not change (always, for linear h).
  GaussianMixture mix;
  Matrix last_H, K, P;
  Eigen::LLT<Matrix> innov_chol;
  std::vector<double> logw(static_cast<size_t>(N));
  for (Index i = 0; i < N; ++i) {
    const Vector x = ens.members.col(i);
    const Matrix H = model.jacobian(x);
    if (i == 0 || H.rows() != last_H.rows() || !(H.array() == last_H.array()).all()) {
      const Matrix BHt = B * H.transpose();
      Matrix S = H * BHt + R;
      innov_chol.compute(0.5 * (S + S.transpose()));
      require(innov_chol.info() == Eigen::Success, Errc::ill_conditioned,
              "engmf: innovation covariance not invertible");
      K = innov_chol.solve(BHt.transpose()).transpose();
      P = (Matrix::Identity(n, n) - K * H) * B;
      P = 0.5 * (P + P.transpose());
      last_H = H;
    }
    const Vector innovation = y - model.h(x);
    mix.means.push_back(x + K * innovation);
    mix.covs.push_back(P);
    logw[static_cast<size_t>(i)] = gaussian_log_pdf(innovation, innov_chol);
  }
  mix.weights = defensive_weights(logw, cfg.defensive);
  return mix;
}

Ensemble engmf_step(const Ensemble& ens, const MeasurementModel& model, const Vector& y,
                    const BaselineConfig& cfg, RngStream& rng) {
  const GaussianMixture mix = engmf_analysis(ens, model, y, cfg);
  const Index n = ens.dim();
  const Index N = ens.size();
  const std::vector<Index> picks = categorical_resample(mix.weights, N, rng);
  Ensemble out{Matrix(n, N)};
  const Matrix* last_cov = nullptr;
  Matrix factor;
  for (Index k = 0; k < N; ++k) {
    const size_t i = static_cast<size_t>(picks[static_cast<size_t>(k)]);
    if (!last_cov || !(mix.covs[i].array() == last_cov->array()).all()) {
      factor = sampling_factor(mix.covs[i]);
      last_cov = &mix.covs[i];
    }
    out.members.col(k) = mix.means[i] + factor * rng.normal_vector(n);
  }
  return out;
}

}  // namespace polyfilt
