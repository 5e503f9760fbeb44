#include "polyfilt/ensemble_filters.hpp"

#include "polyfilt/exact_filters.hpp"
#include "polyfilt/localization.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace polyfilt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

/// Remembers the last square-root factor so components sharing a covariance
/// (every KDE component does) pay for one eigendecomposition.
class FactorCache {
 public:
  const Matrix& factor(const Matrix& cov) {
    if (!same(cov, cov_)) {
      cov_ = cov;
      factor_ = matrix_sqrt(cov);
    }
    return factor_;
  }

 private:
  Matrix cov_;
  Matrix factor_;
};

/// Turns log weights into normalized weights; throws if nothing survives.
std::vector<double> normalize_log_weights(const std::vector<double>& logw) {
  double peak = kNegInf;
  for (double v : logw) {
    require(!std::isnan(v), Errc::non_finite, "log weight is NaN");
    peak = std::max(peak, v);
  }
  if (!std::isfinite(peak))
    throw Error(Errc::weights_degenerate, "all mixture weights vanished after the update");
  std::vector<double> w(logw.size());
  double total = 0.0;
  for (size_t i = 0; i < logw.size(); ++i) {
    w[i] = std::exp(logw[i] - peak);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

double safe_log(double w) { return w > 0.0 ? std::log(w) : kNegInf; }

struct MeasurementTerm {
  double log_weight;
  Vector offset;
  Matrix cov;
  NoiseDensity density;
};

std::vector<MeasurementTerm> measurement_terms(const MeasurementModel& model) {
  std::vector<MeasurementTerm> terms;
  if (const auto* g = std::get_if<GaussianNoise>(&model.noise)) {
    terms.push_back({0.0, Vector::Zero(model.meas_dim), g->cov, NoiseDensity(*g)});
  } else if (const auto* mix = std::get_if<MixtureNoise>(&model.noise)) {
    for (const MixtureTerm& t : mix->terms) {
      MixtureTerm unit = t;
      unit.weight = 1.0;
      unit.mean = Vector::Zero(model.meas_dim);
      terms.push_back({safe_log(t.weight), t.mean, t.cov, NoiseDensity(MixtureNoise{{unit}})});
    }
  } else {
    throw Error(Errc::invalid_argument,
                "Kalmanized updates need Gaussian or mixture noise with covariances");
  }
  return terms;
}

}  // namespace

std::vector<double> PolytopeMixture::weights() const {
  std::vector<double> w;
  w.reserve(components.size());
  for (const auto& c : components) w.push_back(c.weight);
  return w;
}

void validate(const Ensemble& ens) {
  require(ens.size() >= 2, Errc::invalid_argument, "ensemble needs at least two members");
  require(ens.members.allFinite(), Errc::non_finite, "ensemble has non-finite entries");
}

void validate(const PolytopeMixture& mix) {
  require(!mix.components.empty(), Errc::invalid_argument, "mixture has no components");
  double total = 0.0;
  for (const auto& c : mix.components) {
    require(c.weight >= 0.0 && std::isfinite(c.weight), Errc::invalid_argument,
            "mixture weight must be finite and nonnegative");
    total += c.weight;
  }
  require(std::abs(total - 1.0) <= 1e-12, Errc::invalid_argument, "mixture weights must sum to one");
}

Moments mixture_moments(const PolytopeMixture& mix) {
  require(!mix.components.empty(), Errc::invalid_argument, "mixture has no components");
  const Index n = mix.components.front().moments.mean.size();
  Moments m{Vector::Zero(n), Matrix::Zero(n, n)};
  for (const auto& c : mix.components) m.mean += c.weight * c.moments.mean;
  for (const auto& c : mix.components) {
    const Vector dev = c.moments.mean - m.mean;
    m.cov += c.weight * (c.moments.cov + dev * dev.transpose());
  }
  return m;
}

double silverman_uniform_bandwidth(Index n, Index N) {
  require(n >= 1 && N >= 2, Errc::invalid_argument, "silverman bandwidth needs n >= 1, N >= 2");
  const double nd = static_cast<double>(n);
  const double base = 4.0 * std::pow(std::numbers::pi / 3.0, nd / 2.0) * nd /
                      ((nd + 2.0) * static_cast<double>(N));
  return std::pow(base, 1.0 / (nd + 4.0));
}

PolytopeMixture cube_kde(const Ensemble& ens, const KdeConfig& cfg) {
  validate(ens);
  const Index n = ens.dim();
  const Index N = ens.size();

  Matrix cov;
  if (cfg.covariance_source == CovarianceSource::supplied) {
    require(cfg.supplied_cov.rows() == n && cfg.supplied_cov.cols() == n, Errc::dimension_mismatch,
            "cube_kde: supplied covariance shape");
    cov = symmetrized(cfg.supplied_cov);
  } else {
    cov = ensemble_covariance(ens.members);
  }
  if (cfg.localization_radius) cov = cov.cwiseProduct(localization_matrix(n, *cfg.localization_radius));

  PolytopeMixture mix;
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(cov, Eigen::EigenvaluesOnly).eigenvalues();
  if (ev.minCoeff() <= 1e-12 * std::max(ev.maxCoeff(), 0.0)) {
    const double trace = cov.trace();
    require(trace > 0.0, Errc::degenerate, "cube_kde: ensemble covariance is zero");
    cov += (1e-10 * trace / static_cast<double>(n)) * Matrix::Identity(n, n);
    mix.regularized = true;
  }

  double h = cfg.fixed_bandwidth;
  if (cfg.bandwidth_mode == BandwidthMode::silverman_uniform) {
    h = silverman_uniform_bandwidth(n, N);
  } else {
    require(h > 0.0, Errc::invalid_argument, "cube_kde: fixed bandwidth must be positive");
  }
  const Matrix kernel_cov = h * h * cov;

  // Every component is the same cube translated to its particle.
  const CovarianceCube base = covariance_cube(Vector::Zero(n), kernel_cov);
  mix.components.reserve(static_cast<size_t>(N));
  const double w = 1.0 / static_cast<double>(N);
  for (Index i = 0; i < N; ++i) {
    const Vector x = ens.members.col(i);
    HPolytope cube(base.polytope.A(), base.polytope.b() + base.polytope.A() * x);
    mix.components.push_back({w, std::move(cube), Moments{x, base.moments.cov}});
  }
  return mix;
}

PolytopeMixture bcpf_update(const PolytopeMixture& prior, const MeasurementModel& model,
                            const Vector& y, OmegaWeighting weighting) {
  require(y.size() == model.meas_dim, Errc::dimension_mismatch, "bcpf_update: measurement size");
  const NoiseDensity density(model.noise);
  FactorCache factors;
  std::vector<double> logw;
  logw.reserve(prior.components.size());
  const auto log_lik = [&](const Vector& x) { return density.log_pdf(y - model.h(x)); };
  for (const auto& c : prior.components) {
    const OmegaPoints op = omega_points_from_factor(c.moments.mean, factors.factor(c.moments.cov));
    logw.push_back(safe_log(c.weight) + omega_log_expectation(op, log_lik, weighting));
  }
  const std::vector<double> w = normalize_log_weights(logw);
  PolytopeMixture post = prior;
  for (size_t i = 0; i < w.size(); ++i) post.components[i].weight = w[i];
  return post;
}

PolytopeMixture encpf_update(const PolytopeMixture& prior, const MeasurementModel& model,
                             const Vector& y, Index budget, RngStream& rng) {
  require(budget >= 1, Errc::invalid_argument, "encpf_update: Monte Carlo budget must be positive");
  require(y.size() == model.meas_dim, Errc::dimension_mismatch, "encpf_update: measurement size");
  const Index n = model.state_dim;

  // Measurement polytopes P_j^Y (already shifted by y) and their log weights,
  // including 1/volume when it is known (covariance cubes).
  std::vector<HPolytope> meas;
  std::vector<double> meas_logw;
  if (const auto* u = std::get_if<UniformPolytopeNoise>(&model.noise)) {
    meas.emplace_back(u->region.A(), u->region.b() + u->region.A() * y);
    meas_logw.push_back(0.0);
  } else if (const auto* mix = std::get_if<MixtureNoise>(&model.noise)) {
    for (const MixtureTerm& t : mix->terms) {
      require(t.shape == KernelShape::uniform, Errc::invalid_argument,
              "encpf_update: mixture terms must be uniform");
      meas.push_back(covariance_cube(y + t.mean, t.cov).polytope);
      const double log_volume = 0.5 * static_cast<double>(model.meas_dim) * std::log(12.0) +
                                0.5 * std::log(symmetrized(t.cov).determinant());
      meas_logw.push_back(safe_log(t.weight) - log_volume);
    }
  } else {
    throw Error(Errc::invalid_argument, "encpf_update needs uniform measurement noise");
  }
  const size_t M = meas.size();

  RngStream base = rng.split();
  std::vector<double> logw;
  PolytopeMixture post;
  post.regularized = prior.regularized;
  for (size_t i = 0; i < prior.components.size(); ++i) {
    const MixtureComponent& comp = prior.components[i];
    const Vector& mu = comp.moments.mean;
    const Matrix H = model.jacobian(mu);
    const Vector hx = model.h(mu);

    std::vector<std::optional<HPolytope>> pieces;
    for (size_t j = 0; j < M; ++j) {
      const Matrix AH = meas[j].A() * H;
      HPolytope piece = intersect(comp.polytope, HPolytope(AH, meas[j].b() + AH * mu - meas[j].A() * hx));
      bool nonempty = false;
      try {
        nonempty = chebyshev_center(piece).radius > 1e-12;
      } catch (const Error& e) {
        if (e.code() != Errc::infeasible) throw;
      }
      pieces.push_back(nonempty ? std::optional<HPolytope>(std::move(piece)) : std::nullopt);
    }

    // Monte Carlo over the prior component with the exact measurement map.
    RngStream local = base.child(i);
    Vector start = max_violation(comp.polytope, mu) < 0.0 ? mu : chebyshev_center(comp.polytope).center;
    HitAndRunChain chain(comp.polytope, start);
    for (int s = 0; s < 25; ++s) chain.step(local);
    std::vector<Index> hits(M, 0);
    std::vector<Index> inside(M, 0);
    std::vector<Vector> sum(M, Vector::Zero(n));
    std::vector<Matrix> outer(M, Matrix::Zero(n, n));
    for (Index s = 0; s < budget; ++s) {
      const Vector& x = chain.step(local);
      const Vector hxs = model.h(x);
      for (size_t j = 0; j < M; ++j) {
        if (contains(meas[j], hxs)) ++hits[j];
        if (pieces[j] && contains(*pieces[j], x)) {
          ++inside[j];
          sum[j] += x;
          outer[j] += x * x.transpose();
        }
      }
    }

    for (size_t j = 0; j < M; ++j) {
      if (!pieces[j]) continue;
      Moments m;
      if (inside[j] >= 2) {
        const double k = static_cast<double>(inside[j]);
        m.mean = sum[j] / k;
        m.cov = (outer[j] - k * m.mean * m.mean.transpose()) / (k - 1.0);
        m.cov = 0.5 * (m.cov + m.cov.transpose());
      } else {
        m.mean = chebyshev_center(*pieces[j]).center;
        m.cov = Matrix::Zero(n, n);
      }
      const double frac = static_cast<double>(hits[j]) / static_cast<double>(budget);
      logw.push_back(safe_log(comp.weight) + meas_logw[j] + safe_log(frac));
      post.components.push_back({0.0, std::move(*pieces[j]), std::move(m)});
    }
  }
  if (post.components.empty())
    throw Error(Errc::inconsistent_measurement, "every EnCPF intersection is empty");
  const std::vector<double> w = normalize_log_weights(logw);
  for (size_t k = 0; k < w.size(); ++k) post.components[k].weight = w[k];
  return post;
}

PolytopeMixture enkcpf_update(const PolytopeMixture& prior, const MeasurementModel& model,
                              const Vector& y, OmegaWeighting weighting) {
  require(y.size() == model.meas_dim, Errc::dimension_mismatch, "enkcpf_update: measurement size");
  const std::vector<MeasurementTerm> terms = measurement_terms(model);
  FactorCache factors;

  // Gains depend only on (Sigma_i, H_i, R_j); for linear h and a shared KDE
  // covariance they are identical across components.
  Matrix last_cov, last_H;
  std::vector<Gains> cached(terms.size());
  bool have_cache = false;

  PolytopeMixture post;
  post.regularized = prior.regularized;
  post.components.reserve(prior.components.size() * terms.size());
  std::vector<double> logw;
  logw.reserve(prior.components.size() * terms.size());

  for (const auto& comp : prior.components) {
    const Vector& mu = comp.moments.mean;
    const Matrix& cov = comp.moments.cov;
    const Matrix H = model.jacobian(mu);
    const Vector hx = model.h(mu);
    if (!have_cache || !same(cov, last_cov) || !same(H, last_H)) {
      for (size_t j = 0; j < terms.size(); ++j) cached[j] = compute_gains(cov, H, terms[j].cov);
      last_cov = cov;
      last_H = H;
      have_cache = true;
    }
    const OmegaPoints op = omega_points_from_factor(mu, factors.factor(cov));
    for (size_t j = 0; j < terms.size(); ++j) {
      const Vector yj = y + terms[j].offset;
      const KalmanizedMap map = kalmanized_map(cached[j], H, mu, hx, yj);
      HPolytope poly = affine_image(comp.polytope, map.C, map.d);
      Matrix post_cov = map.C * cov * map.C.transpose();
      post_cov = 0.5 * (post_cov + post_cov.transpose());
      const NoiseDensity& density = terms[j].density;
      const auto log_lik = [&](const Vector& x) { return density.log_pdf(yj - model.h(x)); };
      logw.push_back(safe_log(comp.weight) + terms[j].log_weight +
                     omega_log_expectation(op, log_lik, weighting));
      post.components.push_back({0.0, std::move(poly), Moments{map.posterior_mean, std::move(post_cov)}});
    }
  }
  const std::vector<double> w = normalize_log_weights(logw);
  for (size_t k = 0; k < w.size(); ++k) post.components[k].weight = w[k];
  return post;
}

std::vector<double> apply_defensive_factor(std::vector<double> weights, double d_f) {
  require(d_f >= 0.0 && d_f <= 1.0, Errc::invalid_argument, "defensive factor must lie in [0, 1]");
  require(!weights.empty(), Errc::invalid_argument, "defensive factor: no weights");
  const double floor = d_f / static_cast<double>(weights.size());
  for (double& w : weights) w = (1.0 - d_f) * w + floor;
  return weights;
}

void apply_defensive_factor(PolytopeMixture& mix, double d_f) {
  const std::vector<double> w = apply_defensive_factor(mix.weights(), d_f);
  for (size_t i = 0; i < w.size(); ++i) mix.components[i].weight = w[i];
}

Ensemble mixture_resample(const PolytopeMixture& post, Index n_out, const HitAndRunConfig& cfg,
                          RngStream& rng) {
  require(!post.components.empty(), Errc::invalid_argument, "mixture_resample: empty mixture");
  require(cfg.steps >= 1, Errc::invalid_argument, "mixture_resample: steps must be at least 1");
  const Index n = post.components.front().polytope.dim();
  const std::vector<Index> picks = categorical_resample(post.weights(), n_out, rng);
  Ensemble out{Matrix(n, n_out)};
  std::vector<std::optional<Vector>> starts(post.components.size());
  for (Index k = 0; k < n_out; ++k) {
    const size_t idx = static_cast<size_t>(picks[static_cast<size_t>(k)]);
    const MixtureComponent& comp = post.components[idx];
    if (!starts[idx]) {
      const Vector& mean = comp.moments.mean;
      starts[idx] = max_violation(comp.polytope, mean) < 0.0 ? mean : chebyshev_center(comp.polytope).center;
    }
    HitAndRunChain chain(comp.polytope, *starts[idx], cfg.tol);
    for (int s = 0; s < cfg.steps; ++s) chain.step(rng);
    out.members.col(k) = chain.point();
  }
  return out;
}

}  // namespace polyfilt
