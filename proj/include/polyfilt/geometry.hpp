#pragma once

#include "polyfilt/core.hpp"

#include <functional>

namespace polyfilt {

/// Convex set {x | A x <= b}. Boundedness is not enforced here: the same
/// representation carries measurement polyhedra (slabs, half-spaces), and the
/// operations that need a polytope check it themselves.
class HPolytope {
 public:
  /// Throws Errc::dimension_mismatch on shape errors, Errc::invalid_argument
  /// on an all-zero constraint row, Errc::non_finite on NaN/Inf entries.
  HPolytope(Matrix A, Vector b);

  const Matrix& A() const noexcept { return A_; }
  const Vector& b() const noexcept { return b_; }
  Index dim() const noexcept { return A_.cols(); }
  Index num_constraints() const noexcept { return A_.rows(); }

 private:
  Matrix A_;
  Vector b_;
};

/// Mean and covariance summary.
struct Moments {
  Vector mean;
  Matrix cov;
};

/// Throws unless cov is square, matches mean, symmetric to 1e-12 relative and
/// PSD to -1e-12 relative.
void validate(const Moments& m);

struct ChebyshevResult {
  Vector center;
  double radius = 0.0;
};

/// Center plus facet centers of a covariance cube. Column n + l holds
/// mu + v_l and column n - l holds mu - v_l, with v_l = sqrt3 (V sqrt(Lambda))_l.
struct OmegaPoints {
  Matrix points;
  Vector weights;

  Index dim() const noexcept { return points.rows(); }
  /// Signed index: point(l) = mu + v_l, point(-l) = mu - v_l, point(0) = mu.
  Vector point(Index ell) const { return points.col(dim() + ell); }
  Vector center() const { return points.col(dim()); }
};

struct Hyperplane {
  RowVector normal;
  double offset = 0.0;
};

/// Eigendecomposition with descending eigenvalues and eigenvectors whose
/// first nonzero entry is positive.
struct SortedEigen {
  Matrix vectors;
  Vector values;
};

SortedEigen sorted_eigen(const Matrix& symmetric);

/// Row-stacks both constraint systems; redundant rows are kept.
HPolytope intersect(const HPolytope& p1, const HPolytope& p2);

/// Image {C x + d | x in P}. Rejects C with condition number above 1e12.
HPolytope affine_image(const HPolytope& p, const Matrix& C, const Vector& d);

/// {x | H x in Py}, built without any pseudo-inverse.
HPolytope pullback_measurement_polyhedron(const HPolytope& py, const Matrix& H);

bool contains(const HPolytope& p, const Vector& x, double tol = 0.0);

/// max_i (a_i x - b_i); nonpositive exactly when x is in P.
double max_violation(const HPolytope& p, const Vector& x);

/// [0,1]^n as {x <= 1, -x <= 0}.
HPolytope unit_cube(Index n);

struct CovarianceCube {
  HPolytope polytope;
  Moments moments;
};

/// Box sqrt(12) Sigma^{1/2} (Q_n - 1/2) + mu; the uniform law on it has mean
/// mu and covariance Sigma exactly.
CovarianceCube covariance_cube(const Vector& mu, const Matrix& sigma);

/// V sqrt(Lambda) with eigenvalues clamped at zero (not the symmetric root).
Matrix matrix_sqrt(const Matrix& sigma);

/// Principal (symmetric) square root V sqrt(Lambda) V^T of a PSD matrix.
Matrix symmetric_sqrt(const Matrix& sigma);

Hyperplane hyperplane_from_point_normal(const Vector& c, const Vector& v);

/// Largest inscribed ball via the internal simplex solver. Throws
/// Errc::infeasible for an empty set and Errc::unbounded when the ball can grow
/// without limit.
ChebyshevResult chebyshev_center(const HPolytope& p);

OmegaPoints omega_points(const Vector& mu, const Matrix& sigma);

/// Same as omega_points but from a precomputed matrix_sqrt factor.
OmegaPoints omega_points_from_factor(const Vector& mu, const Matrix& sqrt_factor);

/// Recovers (mu, Sigma) using the 1/(2n) normalization of the quadrature proof.
Moments omega_moments(const OmegaPoints& op);

enum class OmegaWeighting {
  weighted,  ///< sum of W_l f(Omega_l) / sum W
  uniform,  ///< plain sum of f(Omega_l), unnormalized
};

double omega_expectation(const OmegaPoints& op, const std::function<double(const Vector&)>& f,
                         OmegaWeighting weighting);

/// log of omega_expectation for a function given by its logarithm; evaluated
/// with max-subtraction so tiny likelihoods do not underflow.
double omega_log_expectation(const OmegaPoints& op,
                             const std::function<double(const Vector&)>& log_f,
                             OmegaWeighting weighting);

/// Symmetrizes after checking |S - S^T| <= tol * max|S|.
Matrix symmetrized(const Matrix& s, double tol = 1e-8);

}  // namespace polyfilt
