#include "zerograds/sampling.hpp"

#include <cmath>

namespace zg {

void SamplerConfig::validate() const {
  if (!(sigma_outer > 0.0) || !std::isfinite(sigma_outer)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid argument: sigma_outer must be > 0");
  }
  if (!(sigma_inner >= 0.0) || sigma_inner > sigma_outer) {
    throw Error(ErrorKind::kInvalidArgument,
                "invalid argument: sigma_inner must lie in [0, sigma_outer]");
  }
  if (batch_size < 1) {
    throw Error(ErrorKind::kInvalidArgument, "invalid argument: batch_size must be >= 1");
  }
}

ParameterVector sample_isotropic_gaussian(Rng& rng, const ParameterVector& mean, double sigma) {
  if (!(sigma >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid argument: sigma must be >= 0");
  }
  Vector z(mean.size());
  rng.fill_normal(z);
  return mean + sigma * z;
}

SamplePair sample_pair(Rng& rng, const ParameterVector& theta, const SamplerConfig& cfg) {
  SamplePair pair;
  pair.x = sample_isotropic_gaussian(rng, theta, cfg.sigma_outer);
  pair.tau = sample_isotropic_gaussian(rng, Vector::Zero(theta.size()), cfg.sigma_inner);
  return pair;
}

double smoothed_objective_estimate(const Task& task, const ParameterVector& theta,
                                   const SamplerConfig& cfg, Rng& rng, int k) {
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "invalid argument: k must be >= 1");
  double sum = 0.0;
  const Vector zero = Vector::Zero(theta.size());
  for (int j = 0; j < k; ++j) {
    const Vector tau = sample_isotropic_gaussian(rng, zero, cfg.sigma_inner);
    sum += task.evaluate(theta - tau);
  }
  return sum / k;
}

}  // namespace zg
