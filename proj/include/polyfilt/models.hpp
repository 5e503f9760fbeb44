#pragma once

#include "polyfilt/measurement.hpp"
#include "polyfilt/sampling.hpp"

#include <functional>

namespace polyfilt {

struct IkedaParams {
  double contraction = 0.9;
  double theta0 = 0.4;
  double theta_scale = 6.0;
  double shift = 1.0;
};

struct L96Params {
  Index n = 40;
  double F = 8.0;
  double dt = 0.05;
};

/// theta = theta0 - theta_scale / (1 + v^2 + w^2), then rotate, scale, shift v.
Vector ikeda_step(const Vector& state, const IkedaParams& p = {});

/// A point on the chaotic Ikeda attractor: (1.25, 0) + N(0, I) iterated 200
/// times, redrawn when it was captured by the coexisting stable fixed point.
Vector ikeda_attractor_point(RngStream& rng, const IkedaParams& p = {});

/// x'_k = -x_{k-1} (x_{k-2} - x_{k+1}) - x_k + F on a cyclic grid.
Vector l96_tendency(const Vector& state, double F);

/// Classical fourth-order Runge-Kutta step.
Vector rk4_step(const std::function<Vector(const Vector&)>& f, const Vector& state, double dt);

Vector l96_step(const Vector& state, const L96Params& p = {});

/// h(x) = |x|, H(x) = x^T / |x|. Throws near the origin.
MeasurementModel range_measurement(Index state_dim, NoiseModel noise);

/// h(x) = x with R = I.
MeasurementModel identity_measurement(Index n);

}  // namespace polyfilt
