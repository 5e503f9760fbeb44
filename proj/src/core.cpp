#include "polyfilt/core.hpp"

namespace polyfilt {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::dimension_mismatch: return "dimension mismatch";
    case Errc::invalid_argument: return "invalid argument";
    case Errc::not_spd: return "matrix not symmetric positive definite";
    case Errc::asymmetric: return "matrix not symmetric";
    case Errc::ill_conditioned: return "singular or ill-conditioned matrix";
    case Errc::infeasible: return "infeasible";
    case Errc::unbounded: return "unbounded";
    case Errc::degenerate: return "degenerate polytope";
    case Errc::inconsistent_measurement: return "inconsistent measurement";
    case Errc::weights_degenerate: return "degenerate weights";
    case Errc::non_finite: return "non-finite value";
    case Errc::io: return "I/O failure";
  }
  return "unknown error";
}

}  // namespace polyfilt
