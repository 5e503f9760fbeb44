#include "polyfilt/sampling.hpp"

#include <cmath>
#include <limits>

namespace polyfilt {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream_id) {
  const std::uint64_t a = mix64(seed);
  const std::uint64_t b = mix64(stream_id ^ 0xD1B54A32D192ED03ULL);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(seeded_engine(seed, stream_id)) {}

RngStream RngStream::child(std::uint64_t id) const {
  return RngStream(mix64(seed_ ^ mix64(stream_id_)), id);
}

RngStream RngStream::split() { return RngStream(engine_(), stream_id_); }

double RngStream::uniform() { return unif_(engine_); }

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * unif_(engine_); }

double RngStream::normal() { return gauss_(engine_); }

Vector RngStream::normal_vector(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = gauss_(engine_);
  return v;
}

Vector sphere_direction(RngStream& rng, Index n) {
  require(n >= 1, Errc::invalid_argument, "sphere_direction: n must be positive");
  while (true) {
    Vector u = rng.normal_vector(n);
    const double norm = u.norm();
    if (norm > 1e-150) return u / norm;
  }
}

namespace {

ChordBounds chord_from(const Vector& slack, const Vector& c, const Vector& row_norms) {
  double r_plus = std::numeric_limits<double>::infinity();
  double r_minus = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < c.size(); ++i) {
    const double threshold = 1e-12 * row_norms(i);
    const double d = std::max(slack(i), 0.0);
    if (c(i) > threshold) {
      r_plus = std::min(r_plus, d / c(i));
    } else if (c(i) < -threshold) {
      r_minus = std::max(r_minus, d / c(i));
    }
  }
  if (!std::isfinite(r_plus) || !std::isfinite(r_minus))
    throw Error(Errc::unbounded, "hit-and-run chord is unbounded; input is a polyhedron");
  return {r_minus, r_plus};
}

}  // namespace

ChordBounds hit_bounds(const HPolytope& p, const Vector& z, const Vector& u, double tol) {
  require(z.size() == p.dim() && u.size() == p.dim(), Errc::dimension_mismatch,
          "hit_bounds: point or direction dimension");
  const double unorm = u.norm();
  require(unorm > 0.0, Errc::invalid_argument, "hit_bounds: zero direction");
  const Vector slack = p.b() - p.A() * z;
  if (slack.minCoeff() < -tol) throw Error(Errc::infeasible, "hit_bounds: start point outside polytope");
  const Vector norms = p.A().rowwise().norm() * unorm;
  return chord_from(slack, p.A() * u, norms);
}

HitAndRunChain::HitAndRunChain(const HPolytope& p, Vector start, double tol)
    : p_(&p), z_(std::move(start)), tol_(tol) {
  require(z_.size() == p.dim(), Errc::dimension_mismatch, "hit-and-run start dimension");
  slack_ = p.b() - p.A() * z_;
  row_norms_ = p.A().rowwise().norm();
  if (slack_.minCoeff() < -tol_)
    throw Error(Errc::infeasible, "hit-and-run start point lies outside the polytope");
}

const Vector& HitAndRunChain::step(RngStream& rng) {
  const Index n = p_->dim();
  const Vector u = sphere_direction(rng, n);
  const Vector c = p_->A() * u;
  const ChordBounds bounds = chord_from(slack_, c, row_norms_);
  if (bounds.r_plus - bounds.r_minus < 1e-14) {
    if (++short_chords_ >= n) throw Error(Errc::degenerate, "polytope has (numerically) zero volume");
    return z_;
  }
  const double r = rng.uniform(bounds.r_minus, bounds.r_plus);
  z_ += r * u;
  slack_ -= r * c;
  if (++moves_ % 256 == 0) slack_ = p_->b() - p_->A() * z_;
  return z_;
}

Vector hit_and_run(const HPolytope& p, const HitAndRunConfig& cfg, RngStream& rng) {
  require(cfg.steps >= 1, Errc::invalid_argument, "hit_and_run: steps must be at least 1");
  Vector start = cfg.start ? *cfg.start : chebyshev_center(p).center;
  HitAndRunChain chain(p, std::move(start), cfg.tol);
  for (int s = 0; s < cfg.steps; ++s) chain.step(rng);
  return chain.point();
}

std::vector<Index> categorical_resample(const std::vector<double>& weights, Index count, RngStream& rng) {
  require(!weights.empty(), Errc::invalid_argument, "categorical_resample: no weights");
  require(count >= 0, Errc::invalid_argument, "categorical_resample: negative count");
  double total = 0.0;
  Index last_positive = -1;
  for (size_t i = 0; i < weights.size(); ++i) {
    require(std::isfinite(weights[i]) && weights[i] >= 0.0, Errc::invalid_argument,
            "categorical_resample: weights must be finite and nonnegative");
    total += weights[i];
    if (weights[i] > 0.0) last_positive = static_cast<Index>(i);
  }
  require(total > 0.0, Errc::weights_degenerate, "categorical_resample: all weights are zero");

  std::vector<Index> out;
  out.reserve(static_cast<size_t>(count));
  if (count == 0) return out;
  const double offset = rng.uniform();
  double cumulative = weights[0] / total;
  size_t k = 0;
  for (Index j = 0; j < count; ++j) {
    const double position = (offset + static_cast<double>(j)) / static_cast<double>(count);
    while (position >= cumulative && k + 1 < weights.size()) {
      ++k;
      cumulative += weights[k] / total;
    }
    Index pick = static_cast<Index>(k);
    if (weights[k] <= 0.0) pick = last_positive;  // rounding pushed past the tail
    out.push_back(pick);
  }
  return out;
}

}  // namespace polyfilt
