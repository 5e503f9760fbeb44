#include "polyfilt/exact_filters.hpp"

#include <cmath>

namespace polyfilt {

Gains compute_gains(const Matrix& sigma, const Matrix& H, const Matrix& R) {
  const Index n = sigma.rows();
  const Index m = H.rows();
  require(sigma.cols() == n && H.cols() == n && R.rows() == m && R.cols() == m,
          Errc::dimension_mismatch, "compute_gains: shapes of Sigma, H, R disagree");
  const Matrix Rs = symmetrized(R, 1e-10);
  const SortedEigen r_eig = sorted_eigen(Rs);
  require(r_eig.values(m - 1) > 1e-14 * std::max(r_eig.values(0), 1e-300), Errc::not_spd,
          "compute_gains: R must be SPD");

  const Matrix PHt = sigma * H.transpose();
  const Matrix HPHt = H * PHt;
  const Matrix innovation = 0.5 * (HPHt + HPHt.transpose()) + Rs;
  // LDLT avoids square roots, so well-scaled scalar cases come out exact.
  Eigen::LDLT<Matrix> chol(innovation);
  require(chol.info() == Eigen::Success && chol.isPositive() && chol.vectorD().minCoeff() > 0.0,
          Errc::ill_conditioned, "compute_gains: innovation not invertible");

  Gains g;
  g.K = chol.solve(PHt.transpose()).transpose();

  const Vector r_sqrt_vals = r_eig.values.cwiseSqrt();
  const Matrix r_half = r_eig.vectors * r_sqrt_vals.asDiagonal() * r_eig.vectors.transpose();
  const Matrix r_half_inv =
      r_eig.vectors * r_sqrt_vals.cwiseInverse().asDiagonal() * r_eig.vectors.transpose();
  const Matrix whitened = r_half_inv * innovation * r_half_inv;
  const Matrix root = r_half * symmetric_sqrt(0.5 * (whitened + whitened.transpose())) * r_half;
  const Matrix modified = innovation + 0.5 * (root + root.transpose());
  Eigen::LDLT<Matrix> chol_mod(modified);
  require(chol_mod.info() == Eigen::Success && chol_mod.vectorD().minCoeff() > 0.0, Errc::ill_conditioned,
          "compute_gains: modified innovation not invertible");
  g.K_tilde = chol_mod.solve(PHt.transpose()).transpose();
  return g;
}

KalmanizedMap kalmanized_map(const Gains& gains, const Matrix& H, const Vector& prior_mean,
                             const Vector& h_at_mean, const Vector& y) {
  const Index n = prior_mean.size();
  KalmanizedMap map;
  const Matrix KtH = gains.K_tilde * H;
  map.C = Matrix::Identity(n, n) - KtH;
  const Vector innovation = y - h_at_mean;
  map.d = KtH * prior_mean + gains.K * innovation;
  map.posterior_mean = prior_mean + gains.K * innovation;
  return map;
}

HPolytope cpf_update(const HPolytope& prior, const MeasurementModel& model, const Vector& y,
                     const Vector& prior_mean) {
  const auto* noise = std::get_if<UniformPolytopeNoise>(&model.noise);
  require(noise != nullptr, Errc::invalid_argument, "cpf_update needs uniform polytope noise");
  require(prior.dim() == model.state_dim && prior_mean.size() == model.state_dim &&
              y.size() == model.meas_dim && noise->region.dim() == model.meas_dim,
          Errc::dimension_mismatch, "cpf_update: dimensions disagree");

  const Matrix& Ay = noise->region.A();
  const Vector by = noise->region.b() + Ay * y;  // P_Y = P_eta + y
  const Matrix H = model.jacobian(prior_mean);
  const Vector hx = model.h(prior_mean);
  require(H.rows() == model.meas_dim && H.cols() == model.state_dim, Errc::dimension_mismatch,
          "cpf_update: Jacobian shape");
  const Matrix AyH = Ay * H;
  const HPolytope measurement(AyH, by + AyH * prior_mean - Ay * hx);
  HPolytope posterior = intersect(prior, measurement);

  try {
    const ChebyshevResult cheb = chebyshev_center(posterior);
    if (cheb.radius <= 1e-12)
      throw Error(Errc::inconsistent_measurement, "posterior polytope has empty interior");
  } catch (const Error& e) {
    if (e.code() == Errc::infeasible)
      throw Error(Errc::inconsistent_measurement, "measurement polyhedron misses the prior");
    throw;
  }
  return posterior;
}

KcpfPosterior kcpf_update(const HPolytope& prior, const Moments& prior_moments,
                          const MeasurementModel& model, const Vector& y) {
  const Matrix& R = gaussian_cov(model);
  const Vector& mu = prior_moments.mean;
  require(prior.dim() == model.state_dim && mu.size() == model.state_dim &&
              y.size() == model.meas_dim,
          Errc::dimension_mismatch, "kcpf_update: dimensions disagree");
  const Matrix H = model.jacobian(mu);
  const Vector hx = model.h(mu);
  Gains gains = compute_gains(prior_moments.cov, H, R);
  const KalmanizedMap map = kalmanized_map(gains, H, mu, hx, y);
  HPolytope posterior = affine_image(prior, map.C, map.d);
  Matrix cov = map.C * prior_moments.cov * map.C.transpose();
  cov = 0.5 * (cov + cov.transpose());
  return KcpfPosterior{std::move(posterior), Moments{map.posterior_mean, std::move(cov)},
                       std::move(gains)};
}

}  // namespace polyfilt
