#include "polyfilt/geometry.hpp"

#include "polyfilt/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace polyfilt {

HPolytope::HPolytope(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b)) {
  require(A_.rows() >= 1 && A_.cols() >= 1, Errc::dimension_mismatch,
          "polytope needs at least one constraint and one dimension");
  require(A_.rows() == b_.size(), Errc::dimension_mismatch, "A and b row counts differ");
  require(A_.allFinite() && b_.allFinite(), Errc::non_finite, "polytope data must be finite");
  for (Index i = 0; i < A_.rows(); ++i) {
    require(A_.row(i).cwiseAbs().maxCoeff() > 0.0, Errc::invalid_argument,
            "constraint row is the zero vector");
  }
}

void validate(const Moments& m) {
  require(m.cov.rows() == m.cov.cols() && m.cov.rows() == m.mean.size(), Errc::dimension_mismatch,
          "moments shapes disagree");
  require(m.mean.allFinite() && m.cov.allFinite(), Errc::non_finite, "moments must be finite");
  const double scale = std::max(m.cov.cwiseAbs().maxCoeff(), 1e-300);
  require((m.cov - m.cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, Errc::asymmetric,
          "covariance not symmetric");
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(m.cov, Eigen::EigenvaluesOnly).eigenvalues();
  require(ev.minCoeff() >= -1e-12 * std::max(ev.maxCoeff(), 0.0), Errc::not_spd,
          "covariance has negative eigenvalues");
}

Matrix symmetrized(const Matrix& s, double tol) {
  require(s.rows() == s.cols(), Errc::dimension_mismatch, "matrix must be square");
  require(s.allFinite(), Errc::non_finite, "matrix must be finite");
  const double scale = std::max(s.cwiseAbs().maxCoeff(), 1e-300);
  require((s - s.transpose()).cwiseAbs().maxCoeff() <= tol * scale, Errc::asymmetric,
          "matrix is not symmetric within tolerance");
  return 0.5 * (s + s.transpose());
}

SortedEigen sorted_eigen(const Matrix& symmetric) {
  const Matrix s = symmetrized(symmetric);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
  require(solver.info() == Eigen::Success, Errc::ill_conditioned, "eigendecomposition failed");
  const Index n = s.rows();
  SortedEigen out{Matrix(n, n), Vector(n)};
  // Descending; stable so tied eigenvalues keep the solver's order.
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return solver.eigenvalues()(a) > solver.eigenvalues()(b);
  });
  for (Index k = 0; k < n; ++k) {
    const Index src = order[static_cast<size_t>(k)];
    out.values(k) = solver.eigenvalues()(src);
    Vector v = solver.eigenvectors().col(src);
    for (Index i = 0; i < n; ++i) {
      if (std::abs(v(i)) > 1e-14) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }
    out.vectors.col(k) = v;
  }
  return out;
}

HPolytope intersect(const HPolytope& p1, const HPolytope& p2) {
  require(p1.dim() == p2.dim(), Errc::dimension_mismatch, "intersect: dimensions differ");
  Matrix A(p1.num_constraints() + p2.num_constraints(), p1.dim());
  A << p1.A(), p2.A();
  Vector b(A.rows());
  b << p1.b(), p2.b();
  return HPolytope(std::move(A), std::move(b));
}

HPolytope affine_image(const HPolytope& p, const Matrix& C, const Vector& d) {
  const Index n = p.dim();
  require(C.rows() == n && C.cols() == n && d.size() == n, Errc::dimension_mismatch,
          "affine_image: C must be n x n and d length n");
  require(C.allFinite() && d.allFinite(), Errc::non_finite, "affine_image: non-finite map");
  // A C^{-1} = (C^{-T} A^T)^T, so factor C^T.
  Eigen::PartialPivLU<Matrix> lu(C.transpose());
  const double rcond = lu.rcond();
  require(rcond > 1e-12 && std::isfinite(rcond), Errc::ill_conditioned,
          "affine_image: map is singular or has condition number above 1e12");
  Matrix A_new = lu.solve(p.A().transpose()).transpose();
  Vector b_new = p.b() + A_new * d;
  return HPolytope(std::move(A_new), std::move(b_new));
}

HPolytope pullback_measurement_polyhedron(const HPolytope& py, const Matrix& H) {
  require(py.dim() == H.rows(), Errc::dimension_mismatch,
          "pullback: measurement polytope dimension must equal rows of H");
  return HPolytope(py.A() * H, py.b());
}

double max_violation(const HPolytope& p, const Vector& x) {
  require(x.size() == p.dim(), Errc::dimension_mismatch, "point dimension differs from polytope");
  return (p.A() * x - p.b()).maxCoeff();
}

bool contains(const HPolytope& p, const Vector& x, double tol) {
  require(tol >= 0.0, Errc::invalid_argument, "contains: negative tolerance");
  return max_violation(p, x) <= tol;
}

HPolytope unit_cube(Index n) {
  require(n >= 1, Errc::invalid_argument, "unit_cube: n must be positive");
  Matrix A(2 * n, n);
  A << Matrix::Identity(n, n), -Matrix::Identity(n, n);
  Vector b(2 * n);
  b << Vector::Ones(n), Vector::Zero(n);
  return HPolytope(std::move(A), std::move(b));
}

namespace {

SortedEigen spd_eigen(const Matrix& sigma, const char* what) {
  require(sigma.rows() == sigma.cols(), Errc::dimension_mismatch, what);
  SortedEigen eig = sorted_eigen(sigma);
  const double largest = eig.values(0);
  require(largest > 0.0 && eig.values(eig.values.size() - 1) > 1e-14 * largest, Errc::not_spd, what);
  return eig;
}

Matrix factor_from(const SortedEigen& eig) {
  return eig.vectors * eig.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

Matrix matrix_sqrt(const Matrix& sigma) { return factor_from(sorted_eigen(sigma)); }

Matrix symmetric_sqrt(const Matrix& sigma) {
  const SortedEigen eig = sorted_eigen(sigma);
  return eig.vectors * eig.values.cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.vectors.transpose();
}

CovarianceCube covariance_cube(const Vector& mu, const Matrix& sigma) {
  require(mu.size() == sigma.rows(), Errc::dimension_mismatch, "covariance_cube: mu and Sigma differ");
  const SortedEigen eig = spd_eigen(sigma, "covariance_cube: Sigma must be SPD");
  const Index n = mu.size();
  const Matrix C = std::sqrt(12.0) * factor_from(eig);
  const Vector d = mu - 0.5 * C * Vector::Ones(n);
  return CovarianceCube{affine_image(unit_cube(n), C, d), Moments{mu, symmetrized(sigma)}};
}

Hyperplane hyperplane_from_point_normal(const Vector& c, const Vector& v) {
  require(c.size() == v.size(), Errc::dimension_mismatch, "hyperplane: point and normal differ");
  require(v.squaredNorm() > 0.0, Errc::invalid_argument, "hyperplane: zero normal");
  Hyperplane h{v.transpose(), 0.0};
  h.offset = h.normal.dot(c);
  return h;
}

ChebyshevResult chebyshev_center(const HPolytope& p) {
  const Index n = p.dim();
  const Index m = p.num_constraints();
  // Variables [x+, x-, r]; each row normalized so the ball term is just r.
  Matrix lp_A(m, 2 * n + 1);
  Vector lp_b(m);
  for (Index i = 0; i < m; ++i) {
    const double norm = p.A().row(i).norm();
    lp_A.row(i).head(n) = p.A().row(i) / norm;
    lp_A.row(i).segment(n, n) = -p.A().row(i) / norm;
    lp_A(i, 2 * n) = 1.0;
    lp_b(i) = p.b()(i) / norm;
  }
  Vector c = Vector::Zero(2 * n + 1);
  c(2 * n) = 1.0;
  const lp::Result res = lp::maximize(lp_A, lp_b, c);
  if (res.status == lp::Status::infeasible) throw Error(Errc::infeasible, "polytope is empty");
  if (res.status == lp::Status::unbounded)
    throw Error(Errc::unbounded, "Chebyshev LP unbounded; set is not a polytope");
  ChebyshevResult out;
  out.center = res.solution.head(n) - res.solution.segment(n, n);
  out.radius = std::max(res.solution(2 * n), 0.0);
  return out;
}

OmegaPoints omega_points_from_factor(const Vector& mu, const Matrix& sqrt_factor) {
  const Index n = mu.size();
  require(sqrt_factor.rows() == n && sqrt_factor.cols() == n, Errc::dimension_mismatch,
          "omega_points: factor shape");
  OmegaPoints op;
  op.points.resize(n, 2 * n + 1);
  const Matrix scaled = std::sqrt(3.0) * sqrt_factor;
  for (Index ell = 1; ell <= n; ++ell) {
    op.points.col(n - ell) = mu - scaled.col(ell - 1);
    op.points.col(n + ell) = mu + scaled.col(ell - 1);
  }
  op.points.col(n) = mu;
  op.weights = Vector::Constant(2 * n + 1, static_cast<double>(n) / 3.0);
  op.weights(n) = 1.0;
  return op;
}

OmegaPoints omega_points(const Vector& mu, const Matrix& sigma) {
  require(mu.size() == sigma.rows(), Errc::dimension_mismatch, "omega_points: mu and Sigma differ");
  return omega_points_from_factor(mu, factor_from(spd_eigen(sigma, "omega_points: Sigma must be SPD")));
}

Moments omega_moments(const OmegaPoints& op) {
  const Index n = op.dim();
  Moments m{op.center(), Matrix::Zero(n, n)};
  for (Index ell = -n; ell <= n; ++ell) {
    if (ell == 0) continue;
    const Vector dev = op.point(ell) - m.mean;
    m.cov += op.weights(ell + n) * dev * dev.transpose();
  }
  m.cov /= static_cast<double>(2 * n);
  return m;
}

double omega_expectation(const OmegaPoints& op, const std::function<double(const Vector&)>& f,
                         OmegaWeighting weighting) {
  const Index count = op.points.cols();
  const double total = weighting == OmegaWeighting::weighted ? op.weights.sum() : 1.0;
  double acc = 0.0;
  for (Index j = 0; j < count; ++j) {
    const double value = f(op.points.col(j));
    require(std::isfinite(value), Errc::non_finite, "omega_expectation: f is not finite");
    acc += (weighting == OmegaWeighting::weighted ? op.weights(j) / total : 1.0) * value;
  }
  return acc;
}

double omega_log_expectation(const OmegaPoints& op,
                             const std::function<double(const Vector&)>& log_f,
                             OmegaWeighting weighting) {
  const Index count = op.points.cols();
  const double total = weighting == OmegaWeighting::weighted ? op.weights.sum() : 1.0;
  std::vector<double> terms(static_cast<size_t>(count));
  double peak = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < count; ++j) {
    const double lw = weighting == OmegaWeighting::weighted ? std::log(op.weights(j) / total) : 0.0;
    const double value = log_f(op.points.col(j));
    require(!std::isnan(value) && value != std::numeric_limits<double>::infinity(), Errc::non_finite,
            "omega_log_expectation: log f is NaN or +inf");
    terms[static_cast<size_t>(j)] = lw + value;
    peak = std::max(peak, terms[static_cast<size_t>(j)]);
  }
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - peak);
  return peak + std::log(acc);
}

}  // namespace polyfilt
