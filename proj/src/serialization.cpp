#include "polyfilt/serialization.hpp"

namespace polyfilt {

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json matrix_to_json(const Matrix& m) {
  Json out = Json::array();
  for (Index r = 0; r < m.rows(); ++r) out.push_back(vector_to_json(m.row(r).transpose()));
  return out;
}

Json polytope_to_json(const HPolytope& p) {
  Json a = Json::array();
  for (Index r = 0; r < p.A().rows(); ++r)
    for (Index c = 0; c < p.A().cols(); ++c) a.push_back(p.A()(r, c));
  return Json{{"A", std::move(a)}, {"b", vector_to_json(p.b())}, {"n", p.dim()}};
}

HPolytope polytope_from_json(const Json& j) {
  try {
    const auto flat = j.at("A").get<std::vector<double>>();
    const auto b = j.at("b").get<std::vector<double>>();
    const auto n = j.at("n").get<Index>();
    require(n >= 1 && static_cast<Index>(flat.size()) == n * static_cast<Index>(b.size()),
            Errc::dimension_mismatch, "polytope JSON: A does not match b and n");
    const Index p = static_cast<Index>(b.size());
    Matrix A(p, n);
    for (Index r = 0; r < p; ++r)
      for (Index c = 0; c < n; ++c) A(r, c) = flat[static_cast<size_t>(r * n + c)];
    return HPolytope(std::move(A), Eigen::Map<const Vector>(b.data(), p));
  } catch (const Json::exception& e) {
    throw Error(Errc::io, std::string("polytope JSON: ") + e.what());
  }
}

Json moments_to_json(const Moments& m) {
  return Json{{"mean", vector_to_json(m.mean)}, {"cov", matrix_to_json(m.cov)}};
}

Json mixture_to_json(const PolytopeMixture& mix) {
  Json out = Json::array();
  for (const auto& c : mix.components) {
    out.push_back(Json{{"weight", c.weight},
                       {"polytope", polytope_to_json(c.polytope)},
                       {"mean", vector_to_json(c.moments.mean)},
                       {"cov", matrix_to_json(c.moments.cov)}});
  }
  return out;
}

Json ensemble_to_json(const Ensemble& ens) {
  Json out = Json::array();
  for (Index i = 0; i < ens.size(); ++i) out.push_back(vector_to_json(ens.members.col(i)));
  return out;
}

}  // namespace polyfilt
