#pragma once

#include "polyfilt/ensemble_filters.hpp"
#include "polyfilt/geometry.hpp"

#include <json.hpp>

namespace polyfilt {

using Json = nlohmann::json;

Json vector_to_json(const Vector& v);
Json matrix_to_json(const Matrix& m);  ///< nested rows

/// {"A": row-major flat array, "b": [...], "n": int}
Json polytope_to_json(const HPolytope& p);
HPolytope polytope_from_json(const Json& j);

Json moments_to_json(const Moments& m);

/// [{"weight", "polytope", "mean", "cov"}, ...]
Json mixture_to_json(const PolytopeMixture& mix);

Json ensemble_to_json(const Ensemble& ens);  ///< list of members

}  // namespace polyfilt
