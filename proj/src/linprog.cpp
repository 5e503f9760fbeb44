#include "polyfilt/linprog.hpp"

#include <limits>
#include <vector>

namespace polyfilt::lp {
namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kCostTol = 1e-10;

class Tableau {
 public:
  Tableau(Index rows, Index cols) : t_(Matrix::Zero(rows, cols + 1)), basis_(rows, -1) {}

  Index rows() const { return t_.rows(); }
  Index cols() const { return t_.cols() - 1; }
  double& at(Index i, Index j) { return t_(i, j); }
  double& rhs(Index i) { return t_(i, cols()); }
  double rhs(Index i) const { return t_(i, t_.cols() - 1); }
  std::vector<Index>& basis() { return basis_; }
  const Matrix& data() const { return t_; }

  void pivot(Index r, Index j) {
    t_.row(r) /= t_(r, j);
    for (Index i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, j);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basis_[static_cast<size_t>(r)] = j;
  }

  /// Runs primal simplex maximizing cost^T z over columns [0, allowed).
  Status optimize(const Vector& cost, Index allowed, int& iterations) {
    const int cap = 200 * static_cast<int>(rows() + cols() + 10);
    while (true) {
      if (++iterations > cap) throw Error(Errc::ill_conditioned, "simplex iteration limit reached");
      Index entering = -1;
      for (Index j = 0; j < allowed; ++j) {
        double reduced = cost(j);
        for (Index i = 0; i < rows(); ++i) {
          const double cb = cost(basis_[static_cast<size_t>(i)]);
          if (cb != 0.0) reduced -= cb * t_(i, j);
        }
        if (reduced > kCostTol) {
          entering = j;
          break;
        }
      }
      if (entering < 0) return Status::optimal;

      Index leaving = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < rows(); ++i) {
        const double a = t_(i, entering);
        if (a <= kPivotTol) continue;
        const double ratio = rhs(i) / a;
        if (ratio < best_ratio - 1e-14 ||
            (ratio <= best_ratio + 1e-14 && leaving >= 0 &&
             basis_[static_cast<size_t>(i)] < basis_[static_cast<size_t>(leaving)])) {
          best_ratio = std::min(best_ratio, ratio);
          leaving = i;
        }
      }
      if (leaving < 0) return Status::unbounded;
      pivot(leaving, entering);
    }
  }

  double objective(const Vector& cost) const {
    double value = 0.0;
    for (Index i = 0; i < rows(); ++i) value += cost(basis_[static_cast<size_t>(i)]) * rhs(i);
    return value;
  }

 private:
  Matrix t_;
  std::vector<Index> basis_;
};

}  // namespace

Result maximize(const Matrix& A, const Vector& b, const Vector& c) {
  require(A.rows() == b.size() && A.cols() == c.size(), Errc::dimension_mismatch,
          "lp::maximize shapes disagree");
  const Index m = A.rows();
  const Index nv = A.cols();

  Index n_art = 0;
  for (Index i = 0; i < m; ++i) n_art += b(i) < 0.0 ? 1 : 0;

  const Index slack0 = nv;
  const Index art0 = nv + m;
  Tableau tab(m, nv + m + n_art);
  Index next_art = art0;
  for (Index i = 0; i < m; ++i) {
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    for (Index j = 0; j < nv; ++j) tab.at(i, j) = sign * A(i, j);
    tab.at(i, slack0 + i) = sign;
    tab.rhs(i) = sign * b(i);
    if (sign < 0.0) {
      tab.at(i, next_art) = 1.0;
      tab.basis()[static_cast<size_t>(i)] = next_art++;
    } else {
      tab.basis()[static_cast<size_t>(i)] = slack0 + i;
    }
  }

  Result result;
  const double scale = 1.0 + (b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0);

  if (n_art > 0) {
    Vector phase1 = Vector::Zero(tab.cols());
    phase1.tail(n_art).setConstant(-1.0);
    tab.optimize(phase1, tab.cols(), result.iterations);
    if (-tab.objective(phase1) > 1e-9 * scale) {
      result.status = Status::infeasible;
      return result;
    }
    // Pivot remaining zero-level artificials out where possible; rows with no
    // usable pivot are redundant and keep their artificial at zero.
    for (Index i = 0; i < m; ++i) {
      if (tab.basis()[static_cast<size_t>(i)] < art0) continue;
      for (Index j = 0; j < art0; ++j) {
        if (std::abs(tab.at(i, j)) > 1e-9) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }

  Vector phase2 = Vector::Zero(tab.cols());
  phase2.head(nv) = c;
  const Status status = tab.optimize(phase2, art0, result.iterations);
  result.status = status;
  if (status != Status::optimal) return result;

  result.solution = Vector::Zero(nv);
  for (Index i = 0; i < m; ++i) {
    const Index j = tab.basis()[static_cast<size_t>(i)];
    if (j < nv) result.solution(j) = tab.rhs(i);
  }
  result.objective = c.dot(result.solution);
  return result;
}

}  // namespace polyfilt::lp
