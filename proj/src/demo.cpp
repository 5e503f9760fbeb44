#include "polyfilt/demo.hpp"

#include "polyfilt/exact_filters.hpp"
#include "polyfilt/models.hpp"

#include <cmath>
#include <fstream>

namespace polyfilt {

namespace {

MeasurementModel linear_first_coordinate(NoiseModel noise) {
  MeasurementModel m;
  m.state_dim = 2;
  m.meas_dim = 1;
  m.h = [](const Vector& x) { return Vector::Constant(1, x(0)); };
  m.jacobian = [](const Vector&) {
    Matrix H(1, 2);
    H << 1.0, 0.0;
    return H;
  };
  m.noise = std::move(noise);
  return m;
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

/// Uniform noise on the covariance cube Q_{0, var} in one dimension.
UniformPolytopeNoise interval_noise(double var) { return {covariance_cube(Vector::Zero(1), scalar(var)).polytope}; }

/// Samples the posterior and probes a box around the prior; records whether
/// the posterior agrees with "prior and measurement constraint" everywhere.
Json spot_checks(const HPolytope& prior, const HPolytope& posterior,
                 const std::function<bool(const Vector&)>& measurement_ok, std::uint64_t seed) {
  RngStream rng(seed, 77);
  int probes = 0;
  int agree = 0;
  for (int i = 0; i < 2000; ++i) {
    Vector x(2);
    x << rng.uniform(-6.0, 1.0), rng.uniform(-3.5, 3.5);
    const bool expect = contains(prior, x) && measurement_ok(x);
    ++probes;
    if (expect == contains(posterior, x)) ++agree;
  }
  Json samples = Json::array();
  HitAndRunConfig hr;
  hr.steps = 50;
  for (int i = 0; i < 200; ++i) samples.push_back(vector_to_json(hit_and_run(posterior, hr, rng)));
  return Json{{"probes", probes}, {"agree", agree}, {"posterior_samples", samples}};
}

Json cpf_demo(std::uint64_t seed) {
  const Moments prior_m = static_prior();
  const CovarianceCube prior = covariance_cube(prior_m.mean, prior_m.cov);
  const MeasurementModel model = linear_first_coordinate(interval_noise(0.25));
  const Vector y = Vector::Zero(1);
  const HPolytope post = cpf_update(prior.polytope, model, y, prior_m.mean);
  const double half = std::sqrt(3.0) / 2.0;
  return Json{{"which", "cpf"},
              {"prior", polytope_to_json(prior.polytope)},
              {"prior_moments", moments_to_json(prior_m)},
              {"measurement", {{"h", "x1"}, {"noise", polytope_to_json(std::get<UniformPolytopeNoise>(model.noise).region)}, {"y", vector_to_json(y)}}},
              {"posterior", polytope_to_json(post)},
              {"checks", spot_checks(prior.polytope, post, [half](const Vector& x) { return std::abs(x(0)) <= half; }, seed)}};
}

Json ecpf_demo(std::uint64_t seed) {
  const Moments prior_m = static_prior();
  const CovarianceCube prior = covariance_cube(prior_m.mean, prior_m.cov);
  const MeasurementModel model = range_measurement(2, interval_noise(1.0 / 16.0));
  const Vector y = Vector::Constant(1, 1.0);
  const HPolytope post = cpf_update(prior.polytope, model, y, prior_m.mean);
  // The linearized slab, not the doughnut, is what the update intersects.
  const Matrix H = model.jacobian(prior_m.mean);
  const double hm = model.h(prior_m.mean)(0);
  const double half = std::sqrt(3.0) / 4.0;
  auto slab = [&](const Vector& x) {
    const double lin = hm + (H * (x - prior_m.mean))(0);
    return std::abs(lin - 1.0) <= half;
  };
  return Json{{"which", "ecpf"},
              {"prior", polytope_to_json(prior.polytope)},
              {"prior_moments", moments_to_json(prior_m)},
              {"measurement", {{"h", "range"}, {"noise", polytope_to_json(std::get<UniformPolytopeNoise>(model.noise).region)}, {"y", vector_to_json(y)}}},
              {"posterior", polytope_to_json(post)},
              {"checks", spot_checks(prior.polytope, post, slab, seed)}};
}

Json kcpf_demo(const std::string& which, std::uint64_t seed) {
  const Moments prior_m = static_prior();
  const CovarianceCube prior = covariance_cube(prior_m.mean, prior_m.cov);
  const bool extended = which == "ekcpf";
  const MeasurementModel model = extended ? range_measurement(2, GaussianNoise{scalar(1.0 / 16.0)})
                                          : linear_first_coordinate(GaussianNoise{scalar(0.25)});
  const Vector y = Vector::Constant(1, extended ? 1.0 : 0.0);
  const KcpfPosterior post = kcpf_update(prior.polytope, prior.moments, model, y);
  RngStream rng(seed, 78);
  Json samples = Json::array();
  HitAndRunConfig hr;
  hr.steps = 50;
  for (int i = 0; i < 200; ++i) samples.push_back(vector_to_json(hit_and_run(post.polytope, hr, rng)));
  return Json{{"which", which},
              {"prior", polytope_to_json(prior.polytope)},
              {"prior_moments", moments_to_json(prior_m)},
              {"measurement", {{"h", extended ? "range" : "x1"}, {"R", gaussian_cov(model)(0, 0)}, {"y", vector_to_json(y)}}},
              {"posterior", polytope_to_json(post.polytope)},
              {"posterior_moments", moments_to_json(post.moments)},
              {"gains", {{"K", matrix_to_json(post.gains.K)}, {"K_tilde", matrix_to_json(post.gains.K_tilde)}}},
              {"posterior_samples", samples}};
}

Json gaussian_mixture_to_json(const GaussianMixture& g) {
  Json out = Json::array();
  for (size_t i = 0; i < g.weights.size(); ++i)
    out.push_back(Json{{"weight", g.weights[i]}, {"mean", vector_to_json(g.means[i])}, {"cov", matrix_to_json(g.covs[i])}});
  return out;
}

Json banana_json(std::uint64_t seed) {
  const BananaResult r = banana_demo(seed);
  Json methods;
  methods["engmf"] = gaussian_mixture_to_json(r.engmf);
  methods["bcpf"] = mixture_to_json(r.bcpf);
  methods["encpf"] = mixture_to_json(r.encpf);
  methods["enkcpf"] = mixture_to_json(r.enkcpf);
  Json means;
  Vector engmf_mean = Vector::Zero(2);
  for (size_t i = 0; i < r.engmf.weights.size(); ++i) engmf_mean += r.engmf.weights[i] * r.engmf.means[i];
  means["engmf"] = vector_to_json(engmf_mean);
  means["bcpf"] = vector_to_json(mixture_moments(r.bcpf).mean);
  means["encpf"] = vector_to_json(mixture_moments(r.encpf).mean);
  means["enkcpf"] = vector_to_json(mixture_moments(r.enkcpf).mean);
  return Json{{"which", "banana"},
              {"prior_moments", moments_to_json(static_prior())},
              {"measurement", {{"h", "range"}, {"R", 1.0 / 16.0}, {"y", 1.0}}},
              {"samples", ensemble_to_json(r.samples)},
              {"prior_kde", mixture_to_json(r.prior_kde)},
              {"posteriors", methods},
              {"posterior_means", means}};
}

}  // namespace

Moments static_prior() {
  Vector mu(2);
  mu << -2.5, 0.0;
  Matrix sigma(2, 2);
  sigma << 1.0, 0.5, 0.5, 1.0;
  return {mu, sigma};
}

BananaResult banana_demo(std::uint64_t seed) {
  constexpr Index N = 25;
  const Moments prior = static_prior();
  RngStream rng(seed, 25);
  const Matrix L = Eigen::LLT<Matrix>(prior.cov).matrixL();
  BananaResult r{Ensemble{Matrix(2, N)}, {}, {}, {}, {}, {}};
  for (Index i = 0; i < N; ++i) r.samples.members.col(i) = prior.mean + L * rng.normal_vector(2);

  const Vector y = Vector::Constant(1, 1.0);
  const MeasurementModel gaussian = range_measurement(2, GaussianNoise{scalar(1.0 / 16.0)});
  const MeasurementModel uniform = range_measurement(
      2, MixtureNoise{{MixtureTerm{1.0, Vector::Zero(1), scalar(1.0 / 16.0), KernelShape::uniform}}});

  r.prior_kde = cube_kde(r.samples, KdeConfig{});
  BaselineConfig base;
  base.defensive = 0.0;
  r.engmf = engmf_analysis(r.samples, gaussian, y, base);
  r.bcpf = bcpf_update(r.prior_kde, gaussian, y);
  RngStream mc = rng.split();
  r.encpf = encpf_update(r.prior_kde, uniform, y, 1000000 / N, mc);
  r.enkcpf = enkcpf_update(r.prior_kde, gaussian, y);
  return r;
}

Json run_static_demo(const std::string& which, std::uint64_t seed) {
  if (which == "cpf") return cpf_demo(seed);
  if (which == "ecpf") return ecpf_demo(seed);
  if (which == "kcpf" || which == "ekcpf") return kcpf_demo(which, seed);
  if (which == "banana") return banana_json(seed);
  throw Error(Errc::invalid_argument, "unknown demo: " + which);
}

void write_static_demo(const std::string& which, const std::string& path, std::uint64_t seed) {
  const Json j = run_static_demo(which, seed);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open for writing: " + path);
  out << j.dump(1) << "\n";
  if (!out) throw Error(Errc::io, "write failed: " + path);
}

}  // namespace polyfilt
