#pragma once

#include "polyfilt/geometry.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace polyfilt {

/// Reproducible random stream identified by (seed, stream_id). The engine is
/// seeded by hashing both words, so child streams with distinct ids are
/// decorrelated and their draws do not depend on the order in which other
/// streams are consumed. A stream is an owned value; never share one between
/// threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Independent stream keyed on this stream's identity and `id`; does not
  /// depend on how many draws this stream has made.
  RngStream child(std::uint64_t id) const;

  /// Consumes one draw and returns a stream seeded from it, so repeated calls
  /// on an advancing stream yield fresh substreams.
  RngStream split();

  double uniform();                 ///< U[0, 1)
  double uniform(double lo, double hi);
  double normal();                  ///< N(0, 1)
  Vector normal_vector(Index n);
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

/// SplitMix64 finalizer; exposed so callers can derive stream ids from tags.
std::uint64_t mix64(std::uint64_t x) noexcept;

struct HitAndRunConfig {
  int steps = 25;
  /// Interior starting point; the Chebyshev center is used when empty.
  std::optional<Vector> start;
  double tol = 1e-9;
};

struct ChordBounds {
  double r_minus = 0.0;
  double r_plus = 0.0;
};

Vector sphere_direction(RngStream& rng, Index n);

/// Closed-form chord through z along u. Throws Errc::infeasible when z lies
/// outside P by more than tol and Errc::unbounded when a side is unbounded.
ChordBounds hit_bounds(const HPolytope& p, const Vector& z, const Vector& u, double tol = 1e-9);

/// One hit-and-run chain of cfg.steps moves; returns the final point.
Vector hit_and_run(const HPolytope& p, const HitAndRunConfig& cfg, RngStream& rng);

/// Reusable chain state so long runs avoid re-multiplying A z every move.
class HitAndRunChain {
 public:
  HitAndRunChain(const HPolytope& p, Vector start, double tol = 1e-9);

  /// Advances one move and returns the new point.
  const Vector& step(RngStream& rng);
  const Vector& point() const noexcept { return z_; }

 private:
  const HPolytope* p_;
  Vector z_;
  Vector slack_;  // b - A z
  Vector row_norms_;
  int moves_ = 0;
  double tol_;
  int short_chords_ = 0;
};

/// Systematic (low-variance) resampling; returns sorted indices.
std::vector<Index> categorical_resample(const std::vector<double>& weights, Index count, RngStream& rng);

}  // namespace polyfilt
