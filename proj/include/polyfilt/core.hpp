#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace polyfilt {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

/// Failure categories reported by the library. Every thrown polyfilt::Error
/// carries exactly one of these so callers can branch without parsing text.
enum class Errc {
  dimension_mismatch,
  invalid_argument,
  not_spd,
  asymmetric,
  ill_conditioned,
  infeasible,
  unbounded,
  degenerate,
  inconsistent_measurement,
  weights_degenerate,
  non_finite,
  io,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool condition, Errc code, const char* message) {
  if (!condition) throw Error(code, message);
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

}  // namespace polyfilt
