#pragma once

#include <cstdint>
#include <iosfwd>

#include "zerograds/core.hpp"
#include "zerograds/rng.hpp"
#include "zerograds/sampling.hpp"
#include "zerograds/surrogate.hpp"
#include "zerograds/tasks.hpp"

namespace zg {

/// How locality samples x are drawn.
enum class LocalitySampling {
  /// x ~ N(theta, sigma_outer^2 I). The kernel/density ratio is constant and
  /// taken as 1, so every residual enters unweighted.
  kImportance,
  /// x ~ Uniform(domain), each residual weighted by H(x, theta) / p_uniform.
  kUniform,
};

struct EstimatorOptions {
  LocalitySampling locality = LocalitySampling::kImportance;
  /// Uniform mode only: divide every weight by its peak value H(theta,theta)
  /// / p_uniform, i.e. use exp(-|x - theta|^2 / (2 sigma_outer^2)). A
  /// constant rescaling that keeps high-dimensional weights representable.
  bool normalize_uniform_weights = true;
  /// When set, one CSV row (x, tau, f, h, r, w) per sample is appended.
  std::ostream* sample_log = nullptr;
};

struct EstimatorReport {
  Vector grad_phi;
  double mean_sampled_loss = 0.0;     ///< mean of f(x - tau)
  double sampled_loss_stddev = 0.0;   ///< population std. dev. of f(x - tau)
  double mean_surrogate_error = 0.0;  ///< mean of (h(x) - f(x - tau))^2
  int batch_size = 0;
};

/// Monte-Carlo estimate of dL/dphi for the localized, smoothed surrogate
/// loss. Draws all N pairs, evaluates the task on clamp(x - tau), then
/// reduces 2 w_i r_i dh(x_i)/dphi / N in sample order. Consumes exactly N
/// counted task evaluations.
EstimatorReport estimate_gradient(const Surrogate& s, const Task& task,
                                  const ParameterVector& theta, const SamplerConfig& cfg,
                                  Rng& rng, const EstimatorOptions& opts = {});

/// Header line written before the first sample row of a debug log.
void write_sample_log_header(std::ostream& out);

/// 1-D analytic fixture: f(x) = x^2 on [-3, 3], quadratic surrogate
/// h(x) = a00 x^2 + 2 a01 x + a11.
struct QuadraticFixture {
  double theta = 0.3;
  double sigma_outer = 0.5;
  double sigma_inner = 0.075;
  int batch_size = 16;
  Matrix a = (Matrix(2, 2) << 1.2, 0.1, 0.1, 0.05).finished();

  /// E[dL/dphi] from Gaussian moments of x ~ N(theta, sigma_outer^2) and
  /// E[(x - tau)^2 | x] = x^2 + sigma_inner^2. Flattened like phi.
  Vector closed_form_gradient() const;
  TaskPtr make_task() const;
  Surrogate make_surrogate() const;
};

/// trials x |phi| matrix of independent single-batch estimates.
Matrix collect_estimates(const QuadraticFixture& fixture, LocalitySampling locality,
                         int trials, std::uint64_t seed);

struct ProbeReport {
  Vector closed_form;
  Vector empirical_mean;
  Vector standard_error;
  Vector z_score;
  int trials = 0;
  bool passed = false;  ///< every |z| < 3
};

/// Compares the empirical mean of `trials` estimates against the closed
/// form. The agreement is specific to the squared-error surrogate loss;
/// non-quadratic distances (KL, hinge) would bias the nested estimate.
ProbeReport unbiasedness_probe(const QuadraticFixture& fixture, int trials, std::uint64_t seed);

}  // namespace zg
