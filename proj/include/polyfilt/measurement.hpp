#pragma once

#include "polyfilt/geometry.hpp"

#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace polyfilt {

struct GaussianNoise {
  Matrix cov;
};

/// Noise uniformly distributed on a polytope in measurement space.
struct UniformPolytopeNoise {
  HPolytope region;
};

enum class KernelShape { gaussian, uniform };

/// One term of a measurement mixture. `mean` is an offset from the realized
/// measurement, so the term is centered at y + mean. A uniform term lives on
/// the covariance cube Q_{y + mean, cov}.
struct MixtureTerm {
  double weight = 1.0;
  Vector mean;
  Matrix cov;
  KernelShape shape = KernelShape::gaussian;
};

struct MixtureNoise {
  std::vector<MixtureTerm> terms;
};

using NoiseModel = std::variant<GaussianNoise, UniformPolytopeNoise, MixtureNoise>;

using MeasurementFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Matrix(const Vector&)>;

/// y = h(x) + eta.
struct MeasurementModel {
  Index state_dim = 0;
  Index meas_dim = 0;
  MeasurementFn h;
  JacobianFn jacobian;
  NoiseModel noise;
};

/// Checks callable presence, noise dimensions, SPD covariances and that
/// mixture weights sum to one within 1e-12.
void validate(const MeasurementModel& model);

/// Evaluates log p(y | h(x)) for a fixed noise model. Factorizations are done
/// once at construction so per-point cost is O(m^2).
class NoiseDensity {
 public:
  explicit NoiseDensity(const NoiseModel& noise);

  /// log density of the residual y - h(x). Uniform polytope noise is left
  /// unnormalized (0 inside, -inf outside) because its volume is not computed.
  double log_pdf(const Vector& residual) const;

 private:
  struct Term {
    double log_weight;
    Vector mean;
    KernelShape shape;
    Eigen::LLT<Matrix> chol;
    double log_norm;  // Gaussian: -0.5 log det(2 pi R); uniform: -log volume
    std::optional<HPolytope> box;
  };
  std::vector<Term> terms_;
  std::optional<HPolytope> region_;
};

/// Log density of N(x; 0, S) given the Cholesky factor of S.
double gaussian_log_pdf(const Vector& x, const Eigen::LLT<Matrix>& chol);

/// R of a GaussianNoise model; throws Errc::invalid_argument for other noise.
const Matrix& gaussian_cov(const MeasurementModel& model);

}  // namespace polyfilt
