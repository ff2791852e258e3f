#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zerograds/adam.hpp"
#include "zerograds/core.hpp"
#include "zerograds/estimator.hpp"
#include "zerograds/rng.hpp"
#include "zerograds/sampling.hpp"
#include "zerograds/surrogate.hpp"
#include "zerograds/tasks.hpp"

namespace zg {

struct ZeroGradsParams {
  SurrogateConfig surrogate;
  double lr_surrogate = 1e-2;
  double lr_param = 1e-2;  ///< in units of domain extent
  /// lr_param decays along a cosine over the budget to this fraction.
  double lr_param_final = 1.0;
  int k_inner = 4;         ///< surrogate updates per parameter step
  int warmup = 10;         ///< surrogate-only outer iterations
  LocalitySampling locality = LocalitySampling::kImportance;
  /// Fit the MLP output map to the first batch (mean, spread) so the network
  /// always regresses an O(1) signal.
  bool normalize_output = true;
};

struct SpsaParams {
  double c_frac = 1e-2;  ///< perturbation, fraction of extent
  double lr = 5e-2;
};

struct FdParams {
  double eps_frac = 1e-3;
  double lr = 5e-2;
};

struct Fr22Params {
  std::optional<double> sigma;  ///< default: sampler sigma_outer
  double lr = 5e-2;
};

struct SaParams {
  std::optional<double> t0;  ///< default: initial loss
  double alpha = 0.999;
  double sigma_prop_frac = 0.05;
};

struct GaParams {
  int population = 50;
  double sigma_mut_frac = 0.1;
  std::optional<double> mutation_rate;  ///< default 1/n
  double crossover_rate = 0.9;
  int tournament = 3;
};

struct RunConfig {
  std::string method = "zerograds";
  std::int64_t budget_evals = 1000;
  std::optional<double> sigma_outer;  ///< default 0.1 * mean extent
  double sigma_inner_ratio = kDefaultInnerRatio;
  std::optional<int> batch_size;      ///< default 16, or 64 above 100 dims
  std::uint64_t seed = 0;
  int log_every = 1;
  bool record_theta = false;
  std::optional<ParameterVector> initial_theta;

  ZeroGradsParams zerograds;
  SpsaParams spsa;
  FdParams fd;
  Fr22Params fr22;
  SaParams sa;
  GaParams ga;

  /// Sampler settings after applying task-dependent defaults.
  SamplerConfig sampler_for(const Task& task) const;
};

struct TraceRow {
  std::int64_t iter = 0;
  std::int64_t evals = 0;  ///< counted evaluations so far (budget currency)
  double wall_ms = 0.0;
  double loss = 0.0;       ///< bookkeeping loss at the reported parameters
  std::optional<double> grad_norm;
  std::optional<ParameterVector> theta;
};

struct Trace {
  std::vector<TraceRow> rows;
};

struct RunResult {
  Trace trace;
  ParameterVector theta;   ///< final (SA/GA: best-so-far) parameters
  double final_loss = 0.0;
  /// Gradient norm of every parameter step, logged or not.
  std::vector<double> grad_norms;
  bool aborted = false;
  std::string diagnostic;
};

/// Method names accepted by run_method.
std::vector<std::string> method_names();

/// Counted evaluations one iteration of `method` costs on `task`.
std::int64_t iteration_cost(const std::string& method, const Task& task, const RunConfig& cfg);

/// Runs a method until the next iteration would exceed the budget. Never
/// spends more than budget_evals counted evaluations.
RunResult run_method(const Task& task, const RunConfig& cfg);

RunResult run_zerograds(const Task& task, const RunConfig& cfg);
RunResult run_spsa(const Task& task, const RunConfig& cfg);
RunResult run_fd(const Task& task, const RunConfig& cfg);
RunResult run_fr22(const Task& task, const RunConfig& cfg);
RunResult run_sa(const Task& task, const RunConfig& cfg);
RunResult run_ga(const Task& task, const RunConfig& cfg);

// Single-shot gradient estimators behind the baselines.

/// Delta ~ Rademacher^n; g_i = (f(theta + c Delta) - f(theta - c Delta)) / (2 c_i Delta_i).
Vector spsa_gradient(const Task& task, const ParameterVector& theta, const Vector& c, Rng& rng);
/// Central differences, 2n evaluations.
Vector fd_gradient(const Task& task, const ParameterVector& theta, const Vector& eps);
/// (1/N) sum_j f(theta + e_j) e_j / sigma^2 over N/2 antithetic pairs (+-e).
Vector fr22_gradient(const Task& task, const ParameterVector& theta, double sigma, int pairs,
                     Rng& rng);
/// Metropolis rule: accept when delta <= 0, otherwise when u < exp(-delta / T).
bool metropolis_accept(double delta, double temperature, double u);

/// Per-position variance of the last `window` values (sliding, population
/// variance); the result has max(0, size - window + 1) entries.
std::vector<double> windowed_variance(std::span<const double> values, int window);
double median(std::vector<double> values);

/// Runs `method` and returns the windowed variance of its per-step gradient
/// magnitudes. Supported: zerograds (|dh/dtheta| after warm-up), spsa, fr22, fd.
std::vector<double> gradient_variance_trace(const std::string& method, const Task& task,
                                            const RunConfig& cfg, int window = 50);

}  // namespace zg
