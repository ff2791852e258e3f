#pragma once

#include <cstdint>

#include "zerograds/core.hpp"
#include "zerograds/rng.hpp"
#include "zerograds/tasks.hpp"

namespace zg {

inline constexpr double kDefaultInnerRatio = 0.15;

/// Spreads of the locality (outer) and smoothing (inner) Gaussians plus the
/// per-estimate batch size. sigma_inner == 0 switches smoothing off.
struct SamplerConfig {
  double sigma_outer = 0.1;
  double sigma_inner = kDefaultInnerRatio * 0.1;
  int batch_size = 16;

  static SamplerConfig with_ratio(double sigma_outer, double inner_ratio = kDefaultInnerRatio,
                                  int batch_size = 16) {
    return {sigma_outer, inner_ratio * sigma_outer, batch_size};
  }
  /// Default for a task: sigma_outer = 0.1 * mean domain extent.
  static SamplerConfig for_domain(const Domain& domain, int batch_size = 16) {
    return with_ratio(0.1 * domain.mean_extent(), kDefaultInnerRatio, batch_size);
  }

  void validate() const;
};

struct SamplePair {
  ParameterVector x;    ///< locality sample around theta
  ParameterVector tau;  ///< smoothing offset around 0
};

/// mean + sigma * z, z ~ N(0, I). Consumes 2*ceil(n/2) raw outputs.
ParameterVector sample_isotropic_gaussian(Rng& rng, const ParameterVector& mean, double sigma);

/// x ~ N(theta, sigma_outer^2 I), tau ~ N(0, sigma_inner^2 I). x is drawn
/// first, then tau; the pair always consumes 4*ceil(n/2) raw outputs, also
/// when sigma_inner == 0.
SamplePair sample_pair(Rng& rng, const ParameterVector& theta, const SamplerConfig& cfg);

/// Raw RNG outputs consumed by one sample_pair call in dimension n.
constexpr std::uint64_t sample_pair_draws(std::ptrdiff_t n) {
  return 4 * static_cast<std::uint64_t>((n + 1) / 2);
}

/// (1/k) * sum_j f(theta - tau_j), tau_j ~ N(0, sigma_inner^2 I). A Monte-Carlo
/// estimate of the Gaussian-smoothed objective, for logging and tests.
/// Consumes k counted task evaluations.
double smoothed_objective_estimate(const Task& task, const ParameterVector& theta,
                                   const SamplerConfig& cfg, Rng& rng, int k);

}  // namespace zg
