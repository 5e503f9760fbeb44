#pragma once

#include "polyfilt/ensemble_filters.hpp"
#include "polyfilt/measurement.hpp"
#include "polyfilt/sampling.hpp"

#include <optional>
#include <vector>

namespace polyfilt {

/// How the EnKF forms its state-measurement covariances. B-localization needs
/// the state covariance, so a localized EnKF always uses the linearized form;
/// for h = I the two coincide.
enum class EnkfGainMode {
  statistical,  ///< sample covariances of (x_i, h(x_i))
  linearized,   ///< S H^T and H S H^T with H at the ensemble mean
};

struct BaselineConfig {
  double inflation = 1.001;
  std::optional<double> localization_radius;
  /// Additive Gaussian noise applied by the BPF before weighting.
  std::optional<Matrix> process_noise_cov;
  double defensive = 1e-4;
  EnkfGainMode enkf_gain = EnkfGainMode::statistical;
};

void validate(const BaselineConfig& cfg);

/// Square-root EnKF: inflate anomalies, update the mean with K and the
/// anomalies with K_tilde.
Ensemble enkf_step(const Ensemble& ens, const MeasurementModel& model, const Vector& y,
                   const BaselineConfig& cfg);

/// Bootstrap particle filter analysis: optional process noise, likelihood
/// weights, defensive factor, systematic resampling.
Ensemble bpf_step(const Ensemble& ens, const MeasurementModel& model, const Vector& y,
                  const BaselineConfig& cfg, RngStream& rng);

/// Gaussian-kernel Silverman factor h_G = (4 / ((n + 2) N))^{1/(n+4)}.
double silverman_gaussian_bandwidth(Index n, Index N);

struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<Matrix> covs;
};

/// EnGMF analysis: Gaussian KDE with covariance h_G^2 S and one extended
/// Kalman update per kernel. Weights include the defensive factor.
GaussianMixture engmf_analysis(const Ensemble& ens, const MeasurementModel& model, const Vector& y,
                               const BaselineConfig& cfg);

/// engmf_analysis followed by systematic resampling and Gaussian draws.
Ensemble engmf_step(const Ensemble& ens, const MeasurementModel& model, const Vector& y,
                    const BaselineConfig& cfg, RngStream& rng);

}  // namespace polyfilt
