#include "polyfilt/models.hpp"

#include <cmath>

namespace polyfilt {

Vector ikeda_step(const Vector& state, const IkedaParams& p) {
  require(state.size() == 2, Errc::dimension_mismatch, "ikeda_step: state must be 2-D");
  const double v = state(0);
  const double w = state(1);
  const double theta = p.theta0 - p.theta_scale / (1.0 + v * v + w * w);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Vector out(2);
  out(0) = p.shift + p.contraction * (v * c - w * s);
  out(1) = p.contraction * (v * s + w * c);
  return out;
}

Vector ikeda_attractor_point(RngStream& rng, const IkedaParams& p) {
  Vector start(2);
  start << 1.25, 0.0;
  // Roughly half of these starts fall into the fixed point's basin; the loop
  // ends with probability one.
  while (true) {
    Vector x = start + rng.normal_vector(2);
    for (int k = 0; k < 200; ++k) x = ikeda_step(x, p);
    if ((ikeda_step(x, p) - x).norm() > 1e-6) return x;
  }
}

Vector l96_tendency(const Vector& state, double F) {
  const Index n = state.size();
  require(n >= 4, Errc::invalid_argument, "l96_tendency: need at least 4 variables");
  Vector dx(n);
  for (Index k = 0; k < n; ++k) {
    const double xm1 = state((k + n - 1) % n);
    const double xm2 = state((k + n - 2) % n);
    const double xp1 = state((k + 1) % n);
    dx(k) = -xm1 * (xm2 - xp1) - state(k) + F;
  }
  return dx;
}

Vector rk4_step(const std::function<Vector(const Vector&)>& f, const Vector& state, double dt) {
  require(dt > 0.0, Errc::invalid_argument, "rk4_step: dt must be positive");
  const Vector k1 = f(state);
  const Vector k2 = f(state + 0.5 * dt * k1);
  const Vector k3 = f(state + 0.5 * dt * k2);
  const Vector k4 = f(state + dt * k3);
  Vector out = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  require(out.allFinite(), Errc::non_finite, "rk4_step: non-finite stage");
  return out;
}

Vector l96_step(const Vector& state, const L96Params& p) {
  require(state.size() == p.n, Errc::dimension_mismatch, "l96_step: state size");
  return rk4_step([F = p.F](const Vector& x) { return l96_tendency(x, F); }, state, p.dt);
}

MeasurementModel range_measurement(Index state_dim, NoiseModel noise) {
  MeasurementModel m;
  m.state_dim = state_dim;
  m.meas_dim = 1;
  m.h = [](const Vector& x) {
    const double r = x.norm();
    require(r >= 1e-12, Errc::invalid_argument, "range measurement evaluated at the origin");
    return Vector::Constant(1, r);
  };
  m.jacobian = [](const Vector& x) {
    const double r = x.norm();
    require(r >= 1e-12, Errc::invalid_argument, "range Jacobian evaluated at the origin");
    return Matrix(x.transpose() / r);
  };
  m.noise = std::move(noise);
  validate(m);
  return m;
}

MeasurementModel identity_measurement(Index n) {
  MeasurementModel m;
  m.state_dim = n;
  m.meas_dim = n;
  m.h = [](const Vector& x) { return x; };
  m.jacobian = [n](const Vector&) { return Matrix(Matrix::Identity(n, n)); };
  m.noise = GaussianNoise{Matrix::Identity(n, n)};
  return m;
}

}  // namespace polyfilt
