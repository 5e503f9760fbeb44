#pragma once

#include "polyfilt/core.hpp"

namespace polyfilt::lp {

enum class Status { optimal, infeasible, unbounded };

struct Result {
  Status status = Status::infeasible;
  Vector solution;
  double objective = 0.0;
  int iterations = 0;
};

/// Dense two-phase tableau simplex with Bland's anti-cycling rule for
///
///   maximize c^T v   subject to   A v <= b,  v >= 0,
///
/// where b may have entries of either sign (negative rows receive phase-1
/// artificials). Intended for the small, dense programs that show up in
/// Chebyshev-center queries; there is no sparsity or presolve.
Result maximize(const Matrix& A, const Vector& b, const Vector& c);

}  // namespace polyfilt::lp
