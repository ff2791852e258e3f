// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails. `acceptance --only 2,3` runs a subset.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "zerograds/bench.hpp"
#include "zerograds/cli.hpp"

using namespace zg;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> body;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

BenchmarkConfig ensemble(const std::string& task, const std::string& method, std::int64_t budget) {
  BenchmarkConfig cfg;
  cfg.tasks = {task};
  cfg.methods = {method};
  cfg.budget_evals = budget;
  cfg.runs = 10;
  cfg.run.log_every = 50;
  return cfg;
}

EnsembleResult run(const std::string& task, const std::string& method, std::int64_t budget) {
  const auto cfg = ensemble(task, method, budget);
  return run_ensemble(task, method, cfg);
}

// ---------------------------------------------------------------------------
// 1. Analytic surrogate gradients against central differences.

double rel_error(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
}

Outcome surrogate_gradients() {
  constexpr double h = 1e-4;
  double worst = 0.0;
  for (auto kind : {SurrogateKind::kMlp, SurrogateKind::kQuadratic}) {
    Rng rng(kind == SurrogateKind::kMlp ? 1001 : 1002);
    for (int t = 0; t < 100; ++t) {
      const int n = 1 + static_cast<int>(rng.below(6));
      SurrogateConfig cfg;
      cfg.kind = kind;
      cfg.hidden = {4 + static_cast<int>(rng.below(8)), 4 + static_cast<int>(rng.below(8))};
      cfg.activation = rng.below(2) ? Activation::kElu : Activation::kTanh;
      cfg.head = rng.below(2) ? OutputHead::kLinear : OutputHead::kSoftplus;
      Surrogate s = surrogate_init(cfg, n, rng);
      Vector phi = params(s);
      for (auto& v : phi) v = rng.uniform(-1.0, 1.0);
      set_params(s, phi);
      ParameterVector x(n);
      for (auto& v : x) v = rng.uniform(-2.0, 2.0);

      Vector fx(n);
      for (int i = 0; i < n; ++i) {
        ParameterVector a = x, b = x;
        a[i] += h;
        b[i] -= h;
        fx[i] = (forward(s, a) - forward(s, b)) / (2 * h);
      }
      Vector fp(phi.size());
      for (Eigen::Index j = 0; j < phi.size(); ++j) {
        Surrogate a = s, b = s;
        Vector pa = phi, pb = phi;
        pa[j] += h;
        pb[j] -= h;
        set_params(a, pa);
        set_params(b, pb);
        fp[j] = (forward(a, x) - forward(b, x)) / (2 * h);
      }
      SurrogateGradient g(phi.size());
      grad_params(s, x, 1.0, g);
      worst = std::max({worst, rel_error(grad_input(s, x), fx), rel_error(g.d_phi, fp)});
    }
  }
  return {worst < 1e-4, fmt("max relative error %.3g over 2 x 100 instances (< 1e-4)", worst)};
}

// ---------------------------------------------------------------------------
// 2. Unbiasedness against a quadrature oracle.

Outcome unbiasedness() {
  QuadraticFixture fx;
  const Vector truth = oracle::fixture_gradient(fx.theta, fx.sigma_outer, fx.sigma_inner, fx.a);
  const auto probe = unbiasedness_probe(fx, 100000, 2024);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    worst = std::max(worst, std::abs(probe.empirical_mean[i] - truth[i]) / probe.standard_error[i]);
  }
  return {worst < 3.0, fmt("1e5 estimates, max |mean - oracle| = %.3f SE (< 3)", worst)};
}

// ---------------------------------------------------------------------------
// 3. Importance sampling against uniform sampling with kernel weights.

Vector column_variance(const Matrix& m, const std::vector<int>& rows) {
  Vector mean = Vector::Zero(m.cols()), sq = Vector::Zero(m.cols());
  for (int r : rows) {
    mean += m.row(r).transpose();
    sq += m.row(r).transpose().cwiseAbs2();
  }
  const double k = static_cast<double>(rows.size());
  mean /= k;
  return (sq / k - mean.cwiseAbs2()) * (k / (k - 1.0));
}

Outcome variance_reduction() {
  constexpr int kTrials = 10000, kBoot = 10000;
  QuadraticFixture fx;
  const Matrix is = collect_estimates(fx, LocalitySampling::kImportance, kTrials, 31);
  const Matrix un = collect_estimates(fx, LocalitySampling::kUniform, kTrials, 32);
  std::vector<int> all(kTrials);
  for (int i = 0; i < kTrials; ++i) all[i] = i;
  const Vector ratio = column_variance(is, all).cwiseQuotient(column_variance(un, all));

  Rng rng(33);
  std::vector<std::vector<double>> boot(ratio.size());
  std::vector<int> ia(kTrials), ib(kTrials);
  for (int b = 0; b < kBoot; ++b) {
    for (int i = 0; i < kTrials; ++i) {
      ia[i] = static_cast<int>(rng.below(kTrials));
      ib[i] = static_cast<int>(rng.below(kTrials));
    }
    const Vector r = column_variance(is, ia).cwiseQuotient(column_variance(un, ib));
    for (Eigen::Index c = 0; c < r.size(); ++c) boot[c].push_back(r[c]);
  }
  double worst_upper = 0.0;
  for (auto& v : boot) {
    std::sort(v.begin(), v.end());
    worst_upper = std::max(worst_upper, v[static_cast<std::size_t>(0.975 * (v.size() - 1))]);
  }
  return {worst_upper < 1.0,
          fmt("variance ratio IS/uniform per coordinate %.3g %.3g %.3g %.3g, worst 95%% CI upper "
              "%.3g (< 1)",
              ratio[0], ratio[1], ratio[2], ratio[3], worst_upper)};
}

// ---------------------------------------------------------------------------
// 4. Plateau traversal, and finite differences stalling on the plateau.

Outcome plateau() {
  const auto zg = run("plateau1d", "zerograds", 2000);
  int hits = 0;
  for (const auto& r : zg.records) hits += r.final_distance.value() < 0.05 ? 1 : 0;

  double max_move = 0.0;
  const double lo = Plateau1dTask::kPlateauLo, hi = Plateau1dTask::kPlateauHi;
  for (int s = 0; s < 10; ++s) {
    auto task = make_plateau1d();
    RunConfig c;
    c.method = "fd";
    c.budget_evals = 2000;
    c.seed = s;
    const double start = lo + (hi - lo) * (0.2 + 0.06 * s);
    c.initial_theta = Vector::Constant(1, start);
    const double eps = c.fd.eps_frac * task->domain().extent()[0];
    if (!(eps < 0.5 * (hi - lo))) return {false, "fd step not below half the plateau width"};
    const RunResult r = run_method(*task, c);
    max_move = std::max(max_move, std::abs(r.theta[0] - start));
  }
  return {hits >= 9 && max_move < 1e-6,
          fmt("zerograds |theta - theta*| < 0.05 in %d/10 runs (>= 9); fd max move %.3g (< 1e-6)",
              hits, max_move)};
}

// ---------------------------------------------------------------------------
// 5. LED.

Outcome led() {
  const auto e = run("led:8x8", "zerograds", 20000);
  std::vector<double> initial;
  for (const auto& r : e.records) initial.push_back(r.trace.rows.front().loss);
  const double fin = median(e.final_losses), init = median(initial);
  return {fin <= 0.05 * init,
          fmt("median final %.4g vs median initial %.4g: ratio %.3g (<= 0.05)", fin, init,
              fin / init)};
}

// ---------------------------------------------------------------------------
// 6. Rocket cutoff indices.

Outcome rocket() {
  BenchmarkConfig cfg = ensemble("rocket:10x100", "zerograds", 20000);
  std::vector<double> worst;
  for (int i = 0; i < cfg.runs; ++i) {
    auto task = make_task("rocket:10x100", cfg.base_seed + i);
    const auto& rocket = dynamic_cast<const RocketTask&>(*task);
    RunConfig c = cfg.run;
    c.method = "zerograds";
    c.budget_evals = cfg.budget_evals;
    c.seed = cfg.base_seed + i;
    const RunResult r = run_method(*task, c);
    const auto oracle = rocket.optimal_indices();
    int err = 0;
    for (Eigen::Index k = 0; k < r.theta.size(); ++k) {
      const int found = std::clamp(static_cast<int>(std::floor(r.theta[k] * rocket.steps())), 0,
                                   rocket.steps() - 1);
      err = std::max(err, std::abs(found - oracle[k]));
    }
    worst.push_back(err);
  }
  const double med = median(worst);
  std::ostringstream per;
  for (double w : worst) per << ' ' << w;
  return {med <= 1.0,
          fmt("median over runs of the worst per-rocket index error %.1f (<= 1); per run:%s", med,
              per.str().c_str())};
}

// ---------------------------------------------------------------------------
// 7. Texture scaling.

Outcome texture() {
  const double z = median(run("texture:16x16", "zerograds", 50000).final_losses);
  const double s = median(run("texture:16x16", "sa", 50000).final_losses);
  const double g = median(run("texture:16x16", "ga", 50000).final_losses);
  return {z <= 0.1 * s && z <= 0.1 * g,
          fmt("median final MSE zerograds %.4g, sa %.4g, ga %.4g (zerograds <= 0.1x both)", z, s,
              g)};
}

// ---------------------------------------------------------------------------
// 8. Gradient variance on mlpfit.

Outcome gradient_variance() {
  constexpr int kSeeds = 5;
  const char* methods[] = {"zerograds", "spsa", "fr22"};
  std::vector<std::vector<std::vector<double>>> series(3);
  std::size_t common = SIZE_MAX;
  for (int m = 0; m < 3; ++m) {
    for (int s = 0; s < kSeeds; ++s) {
      auto task = make_task("mlpfit:small", s);
      RunConfig c;
      c.budget_evals = 20000;
      c.seed = s;
      series[m].push_back(gradient_variance_trace(methods[m], *task, c, 50));
      common = std::min(common, series[m].back().size());
    }
  }
  double med[3];
  for (int m = 0; m < 3; ++m) {
    std::vector<double> pooled;
    for (const auto& v : series[m]) pooled.insert(pooled.end(), v.begin(), v.begin() + common);
    med[m] = median(pooled);
  }
  return {common > 0 && med[0] <= 0.1 * med[1] && med[0] <= 0.1 * med[2],
          fmt("median windowed variance over the first %zu windows: zerograds %.3g, spsa %.3g, "
              "fr22 %.3g (zerograds <= 0.1x both)",
              common, med[0], med[1], med[2])};
}

// ---------------------------------------------------------------------------
// 9. Ablation ordering.

Outcome ablations() {
  struct Case {
    const char* task;
    std::int64_t budget;
  };
  bool ok = true;
  std::string detail;
  for (const Case& c : {Case{"plateau1d", 2000}, Case{"led:8x8", 20000},
                        Case{"rocket:10x100", 20000}}) {
    double med[4];
    const char* names[] = {"zerograds", "zerograds-nonn", "zerograds-nolocal",
                           "zerograds-nosmooth"};
    for (int m = 0; m < 4; ++m) med[m] = median(run(c.task, names[m], c.budget).final_losses);
    ok = ok && med[0] <= med[1] && med[0] <= med[2];
    detail += fmt("%s: full %.3g nonn %.3g nolocal %.3g (nosmooth %.3g); ", c.task, med[0], med[1],
                  med[2], med[3]);
  }
  detail += "gate: full <= nonn and full <= nolocal";
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 10. CLI reproducibility.

std::string without_wall_ms(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line, out;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') {
      std::vector<std::string> cells;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      if (cells.size() > 5) cells[5].clear();
      line.clear();
      for (std::size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + cells[i];
    }
    out += line + '\n';
  }
  return out;
}

Outcome reproducibility() {
  const auto dir = std::filesystem::temp_directory_path() / "zg_acceptance";
  std::filesystem::create_directories(dir);
  int identical = 0, total = 0;
  for (const auto& m : method_names()) {
    std::string text[2];
    for (int k = 0; k < 2; ++k) {
      const auto path = (dir / (m + std::to_string(k) + ".csv")).string();
      const char* argv[] = {"zerograds", "run",     "--task", "rocket:3x50", "--method",
                            m.c_str(),   "--budget", "500",   "--seed",      "7",
                            "--out",     path.c_str()};
      if (cli_main(12, argv) != 0) return {false, "run failed for " + m};
      text[k] = without_wall_ms(path);
    }
    ++total;
    identical += text[0] == text[1] && !text[0].empty() ? 1 : 0;
  }
  std::filesystem::remove_all(dir);
  return {identical == total,
          fmt("%d/%d methods produced identical CSV modulo wall_ms", identical, total)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Criterion ids to run")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "surrogate gradient correctness", 10, surrogate_gradients},
      {2, "estimator unbiasedness", 60, unbiasedness},
      {3, "importance-sampling variance reduction", 60, variance_reduction},
      {4, "plateau traversal", 30, plateau},
      {5, "LED 8x8", 120, led},
      {6, "rocket optimal control", 120, rocket},
      {7, "texture high-dimensional scaling", 600, texture},
      {8, "gradient variance", 600, gradient_variance},
      {9, "ablation ordering", 300, ablations},
      {10, "reproducibility", 10, reproducibility},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s %d %s: %s; %.1f s (< %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.limit_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
