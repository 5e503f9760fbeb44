#pragma once

#include "polyfilt/geometry.hpp"
#include "polyfilt/measurement.hpp"
#include "polyfilt/sampling.hpp"

#include <optional>
#include <vector>

namespace polyfilt {

/// Column i is particle i.
struct Ensemble {
  Matrix members;

  Index size() const noexcept { return members.cols(); }
  Index dim() const noexcept { return members.rows(); }
};

/// Throws unless N >= 2 and all entries are finite.
void validate(const Ensemble& ens);

struct MixtureComponent {
  double weight = 0.0;
  HPolytope polytope;
  Moments moments;
};

/// Weighted sum of uniform laws on polytopes. Component moments are the
/// analytic moments of each uniform law, except after an EnCPF update where
/// they are Monte Carlo estimates (see encpf_update).
struct PolytopeMixture {
  std::vector<MixtureComponent> components;
  /// Set when the KDE covariance had to be regularized.
  bool regularized = false;

  std::vector<double> weights() const;
};

/// Weights nonnegative and summing to one within 1e-12.
void validate(const PolytopeMixture& mix);

/// Mean and covariance of the whole mixture (law of total variance).
Moments mixture_moments(const PolytopeMixture& mix);

enum class BandwidthMode { silverman_uniform, fixed };
enum class CovarianceSource { ensemble, supplied };

struct KdeConfig {
  BandwidthMode bandwidth_mode = BandwidthMode::silverman_uniform;
  double fixed_bandwidth = 1.0;
  CovarianceSource covariance_source = CovarianceSource::ensemble;
  Matrix supplied_cov;
  std::optional<double> localization_radius;
};

/// h_U = [4 (pi/3)^{n/2} n / ((n + 2) N)]^{1/(n+4)}: AMISE-optimal bandwidth
/// for a cube kernel under a Gaussian reference density.
double silverman_uniform_bandwidth(Index n, Index N);

/// One equally weighted covariance cube Q_{x_i, h^2 S} per particle, where S is
/// the (optionally localized) ensemble covariance or the supplied one.
PolytopeMixture cube_kde(const Ensemble& ens, const KdeConfig& cfg);

/// Reweights components by the omega-point quadrature of the likelihood;
/// polytopes are returned unchanged.
PolytopeMixture bcpf_update(const PolytopeMixture& prior, const MeasurementModel& model,
                            const Vector& y, OmegaWeighting weighting = OmegaWeighting::weighted);

/// Intersects each prior component with each linearized measurement
/// polyhedron (uniform polytope noise, or a mixture whose terms are all
/// uniform). Weights use `budget` hit-and-run samples per prior component to
/// estimate the overlap integral with the exact h. Empty intersections are
/// removed. Component moments are sample estimates from the accepted draws.
PolytopeMixture encpf_update(const PolytopeMixture& prior, const MeasurementModel& model,
                             const Vector& y, Index budget, RngStream& rng);

/// Kalmanized mixture update: one affine image per (prior component,
/// measurement term) pair, with gains from the component covariance.
PolytopeMixture enkcpf_update(const PolytopeMixture& prior, const MeasurementModel& model,
                              const Vector& y, OmegaWeighting weighting = OmegaWeighting::uniform);

/// w <- (1 - d_f) w + d_f / N.
std::vector<double> apply_defensive_factor(std::vector<double> weights, double d_f);
void apply_defensive_factor(PolytopeMixture& mix, double d_f);

/// Systematic resampling over components, then one hit-and-run draw per
/// selection started from the component mean (Chebyshev center if the mean
/// is not strictly interior).
Ensemble mixture_resample(const PolytopeMixture& post, Index n_out, const HitAndRunConfig& cfg,
                          RngStream& rng);

}  // namespace polyfilt
