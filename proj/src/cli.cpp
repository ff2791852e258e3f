#include "zerograds/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "zerograds/bench.hpp"
#include "zerograds/config.hpp"
#include "zerograds/estimator.hpp"

namespace zg {
namespace {

struct Flags {
  std::string task, method, out, format, config;
  std::int64_t budget = 0;
  int runs = 0, batch = 0, jobs = 0, log_every = 0, window = 50, trials = 100000;
  std::uint64_t seed = 0;
  double sigma_outer = 0.0;
};

struct Options {
  CLI::Option* task = nullptr;
  CLI::Option* method = nullptr;
  CLI::Option* budget = nullptr;
  CLI::Option* runs = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* sigma_outer = nullptr;
  CLI::Option* batch = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* format = nullptr;
  CLI::Option* jobs = nullptr;
  CLI::Option* log_every = nullptr;
};

Options add_common(CLI::App* app, Flags& f, bool ensemble) {
  Options o;
  o.task = app->add_option("--task", f.task, ensemble ? "Task spec(s), comma separated" : "Task spec");
  o.method = app->add_option("--method", f.method,
                             ensemble ? "Method(s), comma separated" : "Method name");
  o.budget = app->add_option("--budget", f.budget, "Objective evaluations per run");
  o.seed = app->add_option("--seed", f.seed, "Seed (ensembles use seed + run index)");
  o.sigma_outer = app->add_option("--sigma-outer", f.sigma_outer, "Locality spread sigma_outer");
  o.batch = app->add_option("--batch", f.batch, "Samples per gradient estimate");
  o.out = app->add_option("--out", f.out, "Output file (default stdout)");
  o.format = app->add_option("--format", f.format, "csv or json")
                 ->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--config", f.config, "INI config file; flags override it");
  o.log_every = app->add_option("--log-every", f.log_every, "Trace row every k iterations");
  if (ensemble) {
    o.runs = app->add_option("--runs", f.runs, "Independent runs per (task, method)");
    o.jobs = app->add_option("--jobs", f.jobs, "Parallel runs (default: logical cores)");
  }
  return o;
}

BenchmarkConfig resolve(const Flags& f, const Options& o) {
  BenchmarkConfig cfg;
  if (!f.config.empty()) apply_config_file(f.config, cfg);
  if (o.task && o.task->count()) cfg.tasks = split_list(f.task);
  if (o.method && o.method->count()) cfg.methods = split_list(f.method);
  if (o.budget && o.budget->count()) cfg.budget_evals = f.budget;
  if (o.seed && o.seed->count()) cfg.base_seed = f.seed;
  if (o.sigma_outer && o.sigma_outer->count()) cfg.run.sigma_outer = f.sigma_outer;
  if (o.batch && o.batch->count()) cfg.run.batch_size = f.batch;
  if (o.out && o.out->count()) cfg.output = f.out;
  if (o.format && o.format->count()) cfg.format = f.format;
  if (o.log_every && o.log_every->count()) cfg.run.log_every = f.log_every;
  if (o.runs && o.runs->count()) cfg.runs = f.runs;
  if (o.jobs && o.jobs->count()) cfg.jobs = f.jobs;
  return cfg;
}

void print_summary(const std::vector<EnsembleResult>& results) {
  std::fprintf(stderr, "%-16s %-20s %6s %14s %14s %8s\n", "task", "method", "runs",
               "median_loss", "median_dist", "wall_s");
  for (const auto& e : results) {
    std::vector<double> dist;
    int aborted = 0;
    for (const auto& r : e.records) {
      if (r.final_distance) dist.push_back(*r.final_distance);
      aborted += r.aborted ? 1 : 0;
    }
    std::fprintf(stderr, "%-16s %-20s %6d %14.6g %14s %8.2f", e.task.c_str(), e.method.c_str(),
                 e.runs, median(e.final_losses),
                 dist.empty() ? "-" : std::to_string(median(dist)).c_str(),
                 e.wall.total_ms / 1000.0);
    if (aborted > 0) std::fprintf(stderr, "  (%d aborted)", aborted);
    std::fprintf(stderr, "\n");
  }
}

int cmd_list() {
  std::cout << "tasks:\n";
  for (const auto& t : task_names()) std::cout << "  " << t << "\n";
  std::cout << "methods:\n";
  for (const auto& m : method_names()) std::cout << "  " << m << "\n";
  return 0;
}

int cmd_run(BenchmarkConfig cfg) {
  if (cfg.tasks.size() != 1 || cfg.methods.size() != 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "invalid argument: run takes exactly one --task and one --method");
  }
  cfg.runs = 1;
  cfg.jobs = 1;
  auto results = run_benchmark(cfg);
  export_results(results, cfg);
  print_summary(results);
  return results.front().records.front().aborted ? 1 : 0;
}

int cmd_bench(const BenchmarkConfig& cfg) {
  auto results = run_benchmark(cfg);
  export_results(results, cfg);
  print_summary(results);
  return 0;
}

int cmd_variance(BenchmarkConfig cfg, int window) {
  if (cfg.tasks.size() != 1) {
    throw Error(ErrorKind::kInvalidArgument, "invalid argument: variance takes one --task");
  }
  cfg.validate();
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!cfg.output.empty()) {
    file.open(cfg.output);
    if (!file) throw Error(ErrorKind::kIo, "io: cannot open " + cfg.output + " for writing");
    out = &file;
  }
  *out << "# schema_version=" << kSchemaVersion << "\n";
  *out << "# config=" << config_json(cfg) << "\n";
  *out << "task,method,index,variance\n";
  for (const auto& m : cfg.methods) {
    TaskPtr task = make_task(cfg.tasks.front(), cfg.base_seed);
    RunConfig rc = cfg.run;
    rc.method = m;
    rc.seed = cfg.base_seed;
    rc.budget_evals = cfg.budget_evals;
    const auto var = gradient_variance_trace(m, *task, rc, window);
    for (std::size_t i = 0; i < var.size(); ++i) {
      *out << cfg.tasks.front() << ',' << m << ',' << i << ',' << var[i] << "\n";
    }
    std::fprintf(stderr, "%-12s windows=%zu median_variance=%.6g\n", m.c_str(), var.size(),
                 var.empty() ? 0.0 : median(var));
  }
  return 0;
}

int cmd_check(int trials, std::uint64_t seed) {
  bool ok = true;
  for (auto kind : {SurrogateKind::kMlp, SurrogateKind::kQuadratic}) {
    const auto g = gradient_check(kind, 100, seed);
    std::printf("%s gradient check (%s): %d instances, input rel err %.3g, param rel err %.3g\n",
                g.passed ? "PASS" : "FAIL", to_string(kind).c_str(), g.instances,
                g.max_input_error, g.max_param_error);
    ok = ok && g.passed;
  }
  const auto probe = unbiasedness_probe(QuadraticFixture{}, trials, seed);
  std::printf("%s estimator unbiasedness: %d trials, max |z| %.3f\n",
              probe.passed ? "PASS" : "FAIL", probe.trials, probe.z_score.cwiseAbs().maxCoeff());
  ok = ok && probe.passed;
  return ok ? 0 : 1;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"ZeroGrads surrogate-gradient optimization benchmarks", "zerograds"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "List registered tasks and methods");
  auto* run = app.add_subcommand("run", "Single run; writes its trace");
  auto* bench = app.add_subcommand("bench", "Ensembles over tasks x methods at equal budget");
  auto* variance =
      app.add_subcommand("variance", "Windowed variance of per-step gradient magnitudes");
  auto* check = app.add_subcommand("check", "Gradient checks and estimator unbiasedness probe");

  Flags rf, bf, vf, cf;
  const Options ro = add_common(run, rf, false);
  const Options bo = add_common(bench, bf, true);
  const Options vo = add_common(variance, vf, false);
  variance->add_option("--window", vf.window, "Sliding window length")->check(CLI::PositiveNumber);
  check->add_option("--trials", cf.trials, "Estimates in the unbiasedness probe")
      ->check(CLI::PositiveNumber);
  check->add_option("--seed", cf.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (list->parsed()) return cmd_list();
    if (run->parsed()) return cmd_run(resolve(rf, ro));
    if (bench->parsed()) return cmd_bench(resolve(bf, bo));
    if (variance->parsed()) return cmd_variance(resolve(vf, vo), vf.window);
    if (check->parsed()) return cmd_check(cf.trials, cf.seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.kind() == ErrorKind::kInvalidArgument || e.kind() == ErrorKind::kUnknownName) {
      std::cerr << app.help() << "\n";
      return 2;
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace zg
