#pragma once

#include "polyfilt/geometry.hpp"
#include "polyfilt/measurement.hpp"

namespace polyfilt {

/// Kalman gain K and the square-root ("modified") gain K_tilde that maps
/// prior anomalies to posterior anomalies.
struct Gains {
  Matrix K;
  Matrix K_tilde;
};

/// K = S H^T (H S H^T + R)^{-1},
/// K_tilde = S H^T (H S H^T + R (I + sqrtm(I + R^{-1} H S H^T)))^{-1}.
///
/// The matrix root is taken in the symmetric form
/// R^{1/2} sqrtm(R^{-1/2} (R + H S H^T) R^{-1/2}) R^{1/2}, which equals
/// R sqrtm(I + R^{-1} H S H^T) and is always real.
Gains compute_gains(const Matrix& sigma, const Matrix& H, const Matrix& R);

/// Intersection update with uniform polytope noise, linearized about
/// `prior_mean`. For linear h the linearization is exact.
/// Throws Errc::inconsistent_measurement if the posterior has no interior.
HPolytope cpf_update(const HPolytope& prior, const MeasurementModel& model, const Vector& y,
                     const Vector& prior_mean);

struct KcpfPosterior {
  HPolytope polytope;
  Moments moments;
  Gains gains;
};

/// Affine (Kalmanized) update with Gaussian noise, linearized about the prior
/// mean. `prior_moments` must be the moments of the uniform law on `prior`.
KcpfPosterior kcpf_update(const HPolytope& prior, const Moments& prior_moments,
                          const MeasurementModel& model, const Vector& y);

/// Affine map (C, d) applied by the Kalmanized update for given gains,
/// Jacobian H and linearization point. Shared with the ensemble updates.
struct KalmanizedMap {
  Matrix C;
  Vector d;
  Vector posterior_mean;
};

KalmanizedMap kalmanized_map(const Gains& gains, const Matrix& H, const Vector& prior_mean,
                             const Vector& h_at_mean, const Vector& y);

}  // namespace polyfilt
