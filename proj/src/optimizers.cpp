#include "zerograds/optimizers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <numbers>

namespace zg {

SamplerConfig RunConfig::sampler_for(const Task& task) const {
  SamplerConfig s;
  s.sigma_outer = sigma_outer.value_or(task.sigma_outer_fraction() * task.domain().mean_extent());
  s.sigma_inner = sigma_inner_ratio * s.sigma_outer;
  s.batch_size = batch_size.value_or(task.dim() > 100 ? 64 : 16);
  return s;
}

std::vector<std::string> method_names() {
  return {"zerograds", "zerograds-nosmooth", "zerograds-nonn", "zerograds-nolocal",
          "spsa",      "fd",                 "fr22",           "sa",
          "ga"};
}

namespace {

int fr22_pairs(const SamplerConfig& s) { return std::max(1, s.batch_size / 2); }

/// Budget accounting, timing and trace rows shared by all methods.
class RunRecorder {
 public:
  RunRecorder(const Task& task, const RunConfig& cfg)
      : task_(task), cfg_(cfg), start_evals_(task.eval_count()),
        start_(std::chrono::steady_clock::now()) {
    if (cfg.budget_evals < 1) {
      throw Error(ErrorKind::kInvalidArgument, "invalid argument: budget_evals must be >= 1");
    }
    if (cfg.log_every < 1) {
      throw Error(ErrorKind::kInvalidArgument, "invalid argument: log_every must be >= 1");
    }
  }

  std::int64_t used() const {
    return static_cast<std::int64_t>(task_.eval_count() - start_evals_);
  }
  bool affordable(std::int64_t cost) const { return used() + cost <= cfg_.budget_evals; }

  /// Appends a row when due. `known_loss` skips the bookkeeping evaluation
  /// for methods that already hold the loss of the reported point.
  void row(std::int64_t iter, const ParameterVector& theta, std::optional<double> grad_norm,
           std::optional<double> known_loss = std::nullopt, bool force = false) {
    if (!force && iter % cfg_.log_every != 0) return;
    if (!result.trace.rows.empty() && result.trace.rows.back().iter == iter) return;
    TraceRow r;
    r.iter = iter;
    r.evals = used();
    r.loss = known_loss ? *known_loss : task_.evaluate_bookkeeping(theta);
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
                    .count();
    r.grad_norm = grad_norm;
    if (cfg_.record_theta) r.theta = theta;
    result.trace.rows.push_back(std::move(r));
  }

  RunResult finish(std::int64_t iter, const ParameterVector& theta,
                   std::optional<double> known_loss = std::nullopt) {
    row(iter, theta, std::nullopt, known_loss, /*force=*/true);
    result.theta = theta;
    result.final_loss = result.trace.rows.back().loss;
    return std::move(result);
  }

  RunResult abort(std::int64_t iter, const ParameterVector& last_finite, std::string why) {
    result.aborted = true;
    result.diagnostic = std::move(why);
    return finish(iter, last_finite);
  }

  RunResult result;

 private:
  const Task& task_;
  const RunConfig& cfg_;
  std::uint64_t start_evals_;
  std::chrono::steady_clock::time_point start_;
};

ParameterVector initial_theta(const Task& task, const RunConfig& cfg, Rng& rng) {
  if (cfg.initial_theta) {
    require_dim(cfg.initial_theta->size(), task.dim(), "initial_theta");
    return task.domain().clamp(*cfg.initial_theta);
  }
  const Domain& d = task.domain();
  ParameterVector theta(task.dim());
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.uniform(d.lower[i], d.upper[i]);
  return theta;
}

void require_budget(const RunConfig& cfg, std::int64_t minimum, const char* method) {
  if (cfg.budget_evals < minimum) {
    throw Error(ErrorKind::kInvalidArgument, std::string("invalid argument: budget too small for ") +
                                                 method + " (needs >= " + std::to_string(minimum) + ")");
  }
}

/// Shared loop for the gradient-estimate baselines: estimate, Adam step,
/// clamp. `estimate` returns the raw gradient estimate.
template <typename Estimate>
RunResult run_gradient_baseline(const Task& task, const RunConfig& cfg, std::int64_t cost,
                                double lr, const char* method, Estimate&& estimate) {
  require_budget(cfg, cost, method);
  Rng root(cfg.seed);
  Rng init_rng = root.split(0);
  Rng rng = root.split(1);
  RunRecorder rec(task, cfg);
  ParameterVector theta = initial_theta(task, cfg, init_rng);
  AdamState adam(task.dim(), lr);
  adam.scale = task.domain().extent();
  rec.row(0, theta, std::nullopt);
  std::int64_t iter = 0;
  while (rec.affordable(cost)) {
    const Vector g = estimate(theta, rng);
    ++iter;
    if (!all_finite(g)) return rec.abort(iter, theta, "non-finite gradient estimate");
    ParameterVector next = adam_step(adam, theta, g);
    if (!all_finite(next)) return rec.abort(iter, theta, "non-finite parameters");
    theta = task.domain().clamp(next);
    const double norm = g.norm();
    rec.result.grad_norms.push_back(norm);
    rec.row(iter, theta, norm);
  }
  return rec.finish(iter, theta);
}

}  // namespace

std::int64_t iteration_cost(const std::string& method, const Task& task, const RunConfig& cfg) {
  const SamplerConfig s = cfg.sampler_for(task);
  if (method.rfind("zerograds", 0) == 0) {
    return static_cast<std::int64_t>(s.batch_size) * cfg.zerograds.k_inner;
  }
  if (method == "spsa") return 2;
  if (method == "fd") return 2 * task.dim();
  if (method == "fr22") return 2 * fr22_pairs(s);
  if (method == "sa") return 1;
  if (method == "ga") return cfg.ga.population;
  throw Error(ErrorKind::kUnknownName, "unknown method '" + method + "'");
}

RunResult run_method(const Task& task, const RunConfig& cfg) {
  const std::string& m = cfg.method;
  if (m == "zerograds") return run_zerograds(task, cfg);
  if (m == "zerograds-nosmooth") {
    RunConfig c = cfg;
    c.sigma_inner_ratio = 0.0;
    return run_zerograds(task, c);
  }
  if (m == "zerograds-nonn") {
    RunConfig c = cfg;
    c.zerograds.surrogate.kind = SurrogateKind::kQuadratic;
    return run_zerograds(task, c);
  }
  if (m == "zerograds-nolocal") {
    RunConfig c = cfg;
    c.zerograds.locality = LocalitySampling::kUniform;
    return run_zerograds(task, c);
  }
  if (m == "spsa") return run_spsa(task, cfg);
  if (m == "fd") return run_fd(task, cfg);
  if (m == "fr22") return run_fr22(task, cfg);
  if (m == "sa") return run_sa(task, cfg);
  if (m == "ga") return run_ga(task, cfg);
  throw Error(ErrorKind::kUnknownName, "unknown method '" + m + "'");
}

// ---------------------------------------------------------------------------

namespace {

// Sets the MLP output map from one batch of sampled losses. Returns true when
// the map changed, in which case the batch's gradient is stale.
bool fit_output_map(Surrogate& s, const EstimatorReport& est) {
  auto* mlp = std::get_if<MlpSurrogate<double>>(&s);
  if (mlp == nullptr) return false;
  const double mean = est.mean_sampled_loss;
  const double spread =
      std::max({est.sampled_loss_stddev, 0.1 * std::abs(mean), 1e-12});
  mlp->set_output_map(mlp->head() == OutputHead::kLinear ? mean : 0.0, spread);
  return true;
}

}  // namespace

RunResult run_zerograds(const Task& task, const RunConfig& cfg) {
  const ZeroGradsParams& p = cfg.zerograds;
  const SamplerConfig sampler = cfg.sampler_for(task);
  sampler.validate();
  require_budget(cfg, sampler.batch_size, "zerograds");
  if (p.k_inner < 1 || p.warmup < 0) {
    throw Error(ErrorKind::kInvalidArgument, "invalid argument: k_inner >= 1 and warmup >= 0");
  }

  Rng root(cfg.seed);
  Rng init_rng = root.split(0);
  Rng sample_rng = root.split(1);
  RunRecorder rec(task, cfg);

  ParameterVector theta = initial_theta(task, cfg, init_rng);
  Surrogate surrogate = surrogate_init(p.surrogate, static_cast<int>(task.dim()), init_rng,
                                       &task.domain());
  AdamState phi_adam(param_count(surrogate), p.lr_surrogate);
  AdamState theta_adam(task.dim(), p.lr_param);
  theta_adam.scale = task.domain().extent();
  EstimatorOptions opts;
  opts.locality = p.locality;

  rec.row(0, theta, std::nullopt);
  std::int64_t iter = 0;
  bool exhausted = false;
  bool output_mapped = !p.normalize_output;
  while (!exhausted) {
    int steps = 0;
    for (; steps < p.k_inner; ++steps) {
      if (!rec.affordable(sampler.batch_size)) {
        exhausted = true;
        break;
      }
      EstimatorReport est;
      try {
        est = estimate_gradient(surrogate, task, theta, sampler, sample_rng, opts);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNonFinite) throw;
        return rec.abort(iter, theta, e.what());
      }
      if (!output_mapped) {
        output_mapped = true;
        if (fit_output_map(surrogate, est)) continue;
      }
      Vector phi = params(surrogate);
      adam_update(phi_adam, phi, est.grad_phi);
      set_params(surrogate, phi);
    }
    if (steps == 0) break;
    ++iter;

    std::optional<double> norm;
    if (iter > p.warmup) {
      const Vector g = grad_input(surrogate, theta);
      if (!all_finite(g)) return rec.abort(iter, theta, "non-finite surrogate gradient");
      const double progress = static_cast<double>(rec.used()) / static_cast<double>(cfg.budget_evals);
      theta_adam.lr = p.lr_param * (p.lr_param_final + (1.0 - p.lr_param_final) * 0.5 *
                                                          (1.0 + std::cos(std::numbers::pi * progress)));
      ParameterVector next = adam_step(theta_adam, theta, g);
      if (!all_finite(next)) return rec.abort(iter, theta, "non-finite parameters");
      theta = task.domain().clamp(next);
      norm = g.norm();
      rec.result.grad_norms.push_back(*norm);
    }
    rec.row(iter, theta, norm);
  }
  return rec.finish(iter, theta);
}

// ---------------------------------------------------------------------------

Vector spsa_gradient(const Task& task, const ParameterVector& theta, const Vector& c, Rng& rng) {
  require_dim(c.size(), theta.size(), "spsa_gradient");
  Vector delta(theta.size());
  for (Eigen::Index i = 0; i < delta.size(); ++i) delta[i] = rng.rademacher();
  const Vector step = c.cwiseProduct(delta);
  const double diff = task.evaluate(theta + step) - task.evaluate(theta - step);
  return (diff / 2.0) * step.cwiseInverse();
}

Vector fd_gradient(const Task& task, const ParameterVector& theta, const Vector& eps) {
  require_dim(eps.size(), theta.size(), "fd_gradient");
  Vector g(theta.size());
  ParameterVector probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + eps[i];
    const double up = task.evaluate(probe);
    probe[i] = theta[i] - eps[i];
    const double down = task.evaluate(probe);
    probe[i] = theta[i];
    g[i] = (up - down) / (2.0 * eps[i]);
  }
  return g;
}

Vector fr22_gradient(const Task& task, const ParameterVector& theta, double sigma, int pairs,
                     Rng& rng) {
  if (pairs < 1 || !(sigma > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid argument: fr22 needs pairs >= 1, sigma > 0");
  }
  Vector g = Vector::Zero(theta.size());
  for (int j = 0; j < pairs; ++j) {
    const Vector e = sample_isotropic_gaussian(rng, Vector::Zero(theta.size()), sigma);
    // f(theta + e) e + f(theta - e) (-e)
    g += (task.evaluate(theta + e) - task.evaluate(theta - e)) * e;
  }
  return g / (2.0 * pairs * sigma * sigma);
}

RunResult run_spsa(const Task& task, const RunConfig& cfg) {
  const Vector c = cfg.spsa.c_frac * task.domain().extent();
  return run_gradient_baseline(task, cfg, 2, cfg.spsa.lr, "spsa",
                               [&](const ParameterVector& theta, Rng& rng) {
                                 return spsa_gradient(task, theta, c, rng);
                               });
}

RunResult run_fd(const Task& task, const RunConfig& cfg) {
  const Vector eps = cfg.fd.eps_frac * task.domain().extent();
  return run_gradient_baseline(task, cfg, 2 * task.dim(), cfg.fd.lr, "fd",
                               [&](const ParameterVector& theta, Rng&) {
                                 return fd_gradient(task, theta, eps);
                               });
}

RunResult run_fr22(const Task& task, const RunConfig& cfg) {
  const SamplerConfig s = cfg.sampler_for(task);
  const double sigma = cfg.fr22.sigma.value_or(s.sigma_outer);
  const int pairs = fr22_pairs(s);
  return run_gradient_baseline(task, cfg, 2 * pairs, cfg.fr22.lr, "fr22",
                               [&](const ParameterVector& theta, Rng& rng) {
                                 return fr22_gradient(task, theta, sigma, pairs, rng);
                               });
}

// ---------------------------------------------------------------------------

bool metropolis_accept(double delta, double temperature, double u) {
  if (delta <= 0.0) return true;
  if (!(temperature > 0.0)) return false;
  return u < std::exp(-delta / temperature);
}

RunResult run_sa(const Task& task, const RunConfig& cfg) {
  require_budget(cfg, 1, "sa");
  Rng root(cfg.seed);
  Rng init_rng = root.split(0);
  Rng rng = root.split(1);
  RunRecorder rec(task, cfg);
  const Domain& d = task.domain();
  const Vector sigma = cfg.sa.sigma_prop_frac * d.extent();

  ParameterVector current = initial_theta(task, cfg, init_rng);
  double f_current = task.evaluate(current);
  ParameterVector best = current;
  double f_best = f_current;
  const double t0 = cfg.sa.t0.value_or(f_current > 0.0 ? f_current : 1e-12);
  rec.row(0, best, std::nullopt, f_best);

  std::int64_t iter = 0;
  double temperature = t0;
  Vector z(task.dim());
  while (rec.affordable(1)) {
    rng.fill_normal(z);
    const ParameterVector proposal = d.clamp(current + sigma.cwiseProduct(z));
    const double f_prop = task.evaluate(proposal);
    const double u = rng.uniform();
    if (metropolis_accept(f_prop - f_current, temperature, u)) {
      current = proposal;
      f_current = f_prop;
      if (f_current < f_best) {
        best = current;
        f_best = f_current;
      }
    }
    temperature *= cfg.sa.alpha;
    ++iter;
    rec.row(iter, best, std::nullopt, f_best);
  }
  return rec.finish(iter, best, f_best);
}

// ---------------------------------------------------------------------------

RunResult run_ga(const Task& task, const RunConfig& cfg) {
  const GaParams& p = cfg.ga;
  if (p.population < 2 || p.tournament < 1) {
    throw Error(ErrorKind::kInvalidArgument, "invalid argument: ga needs population >= 2");
  }
  require_budget(cfg, p.population, "ga");
  Rng root(cfg.seed);
  Rng init_rng = root.split(0);
  Rng rng = root.split(1);
  RunRecorder rec(task, cfg);
  const Domain& d = task.domain();
  const Eigen::Index n = task.dim();
  const Vector sigma = p.sigma_mut_frac * d.extent();
  const double mutation_rate = p.mutation_rate.value_or(1.0 / static_cast<double>(n));

  std::vector<ParameterVector> pop(p.population);
  std::vector<double> fit(p.population);
  for (int i = 0; i < p.population; ++i) {
    pop[i] = initial_theta(task, cfg, init_rng);
    fit[i] = task.evaluate(pop[i]);
  }
  auto argmin = [](const std::vector<double>& v) {
    return static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin());
  };
  int elite = argmin(fit);
  ParameterVector best = pop[elite];
  double f_best = fit[elite];
  rec.row(0, best, std::nullopt, f_best);

  auto tournament = [&]() {
    int winner = static_cast<int>(rng.below(p.population));
    for (int k = 1; k < p.tournament; ++k) {
      const int c = static_cast<int>(rng.below(p.population));
      if (fit[c] < fit[winner]) winner = c;
    }
    return winner;
  };

  std::int64_t gen = 0;
  std::vector<ParameterVector> next(p.population);
  std::vector<double> next_fit(p.population);
  while (rec.affordable(p.population)) {
    for (int j = 0; j < p.population; ++j) {
      const ParameterVector& a = pop[tournament()];
      const ParameterVector& b = pop[tournament()];
      ParameterVector child = a;
      if (rng.uniform() < p.crossover_rate) {
        for (Eigen::Index g = 0; g < n; ++g) {
          if (rng.next_u64() >> 63) child[g] = b[g];
        }
      }
      for (Eigen::Index g = 0; g < n; ++g) {
        if (rng.uniform() < mutation_rate) child[g] += sigma[g] * rng.normal();
      }
      next[j] = d.clamp(child);
      next_fit[j] = task.evaluate(next[j]);
    }
    // Elitism: the previous best replaces the worst child unless a child
    // already matches it.
    const int child_best = argmin(next_fit);
    if (fit[elite] < next_fit[child_best]) {
      const int worst = static_cast<int>(
          std::max_element(next_fit.begin(), next_fit.end()) - next_fit.begin());
      next[worst] = pop[elite];
      next_fit[worst] = fit[elite];
    }
    pop.swap(next);
    fit.swap(next_fit);
    elite = argmin(fit);
    if (fit[elite] < f_best) {
      f_best = fit[elite];
      best = pop[elite];
    }
    ++gen;
    rec.row(gen, best, std::nullopt, f_best);
  }
  return rec.finish(gen, best, f_best);
}

// ---------------------------------------------------------------------------

std::vector<double> windowed_variance(std::span<const double> values, int window) {
  if (window < 1) throw Error(ErrorKind::kInvalidArgument, "invalid argument: window must be >= 1");
  std::vector<double> out;
  if (values.size() < static_cast<std::size_t>(window)) return out;
  for (std::size_t end = window; end <= values.size(); ++end) {
    const auto w = values.subspan(end - window, window);
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / window;
    double var = 0.0;
    for (double v : w) var += (v - mean) * (v - mean);
    out.push_back(var / window);
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

std::vector<double> gradient_variance_trace(const std::string& method, const Task& task,
                                            const RunConfig& cfg, int window) {
  if (method != "zerograds" && method != "spsa" && method != "fr22" && method != "fd") {
    throw Error(ErrorKind::kUnknownName, "unsupported method for gradient variance: " + method);
  }
  RunConfig c = cfg;
  c.method = method;
  const RunResult r = run_method(task, c);
  return windowed_variance(r.grad_norms, window);
}

}  // namespace zg
