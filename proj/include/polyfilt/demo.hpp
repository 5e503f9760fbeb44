#pragma once

#include "polyfilt/baselines.hpp"
#include "polyfilt/ensemble_filters.hpp"
#include "polyfilt/serialization.hpp"

#include <cstdint>
#include <string>

namespace polyfilt {

/// Shared setup of the static examples: Gaussian-moment prior with mean
/// (-2.5, 0) and covariance [[1, .5], [.5, 1]].
Moments static_prior();

/// Everything the banana comparison produces from one shared prior sample.
struct BananaResult {
  Ensemble samples;
  PolytopeMixture prior_kde;
  GaussianMixture engmf;
  PolytopeMixture bcpf;
  PolytopeMixture encpf;
  PolytopeMixture enkcpf;
};

/// 25 draws from the Gaussian prior, then EnGMF, BCPF, EnCPF (uniform
/// Q_{1,1/16} noise, 1e6/N weight samples per component) and EnKCPF
/// (Gaussian noise, variance 1/16) on the measurement y = 1 of the range.
BananaResult banana_demo(std::uint64_t seed);

/// which: cpf, ecpf, kcpf, ekcpf or banana. Throws Errc::invalid_argument
/// for other names.
Json run_static_demo(const std::string& which, std::uint64_t seed);
void write_static_demo(const std::string& which, const std::string& path, std::uint64_t seed);

}  // namespace polyfilt
