#include "zerograds/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace zg {

using nlohmann::json;

void BenchmarkConfig::validate() const {
  if (tasks.empty()) throw Error(ErrorKind::kInvalidArgument, "invalid argument: no tasks given");
  if (methods.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "invalid argument: no methods given");
  }
  if (runs < 1) throw Error(ErrorKind::kInvalidArgument, "invalid argument: runs must be >= 1");
  if (budget_evals < 1) {
    throw Error(ErrorKind::kInvalidArgument, "invalid argument: budget must be >= 1");
  }
  if (format != "csv" && format != "json") {
    throw Error(ErrorKind::kInvalidArgument, "invalid argument: format must be csv or json");
  }
  const auto known = method_names();
  for (const auto& m : methods) {
    if (std::find(known.begin(), known.end(), m) == known.end()) {
      throw Error(ErrorKind::kUnknownName, "unknown method '" + m + "'");
    }
  }
  for (const auto& t : tasks) make_task(t, base_seed);
}

namespace {

RunRecord execute_run(const std::string& task_spec, const std::string& method,
                      const BenchmarkConfig& cfg, int index) {
  RunRecord rec;
  rec.run = index;
  rec.seed = cfg.base_seed + static_cast<std::uint64_t>(index);
  const auto start = std::chrono::steady_clock::now();
  try {
    TaskPtr task = make_task(task_spec, rec.seed);
    RunConfig rc = cfg.run;
    rc.method = method;
    rc.seed = rec.seed;
    rc.budget_evals = cfg.budget_evals;
    RunResult result = run_method(*task, rc);
    rec.trace = std::move(result.trace);
    rec.final_loss = result.final_loss;
    rec.aborted = result.aborted;
    rec.diagnostic = std::move(result.diagnostic);
    if (const auto& oracle = task->oracle_params(); oracle && oracle->size() == result.theta.size()) {
      rec.final_distance = (result.theta - *oracle).cwiseAbs().maxCoeff();
    }
  } catch (const std::exception& e) {
    rec.aborted = true;
    rec.diagnostic = e.what();
    rec.final_loss = std::numeric_limits<double>::quiet_NaN();
  }
  rec.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

int worker_count(const BenchmarkConfig& cfg) {
  int jobs = cfg.jobs > 0 ? cfg.jobs : static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(jobs, 1, cfg.runs);
}

}  // namespace

EnsembleResult run_ensemble(const std::string& task_spec, const std::string& method,
                            const BenchmarkConfig& cfg) {
  BenchmarkConfig one = cfg;
  one.tasks = {task_spec};
  one.methods = {method};
  one.validate();

  EnsembleResult out;
  out.task = task_spec;
  out.method = method;
  out.runs = cfg.runs;
  out.records.resize(cfg.runs);

  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < cfg.runs; i = next++) {
      out.records[i] = execute_run(task_spec, method, cfg, i);
    }
  };
  const int workers = worker_count(cfg);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  std::vector<const Trace*> traces;
  std::vector<double> walls;
  for (const auto& r : out.records) {
    traces.push_back(&r.trace);
    out.final_losses.push_back(r.final_loss);
    walls.push_back(r.wall_ms);
  }
  out.median_curve = median_curve(traces);
  out.wall.min_ms = *std::min_element(walls.begin(), walls.end());
  out.wall.max_ms = *std::max_element(walls.begin(), walls.end());
  out.wall.median_ms = median(walls);
  for (double w : walls) out.wall.total_ms += w;
  return out;
}

std::vector<EnsembleResult> run_benchmark(const BenchmarkConfig& cfg) {
  cfg.validate();
  std::vector<EnsembleResult> results;
  for (const auto& t : cfg.tasks) {
    for (const auto& m : cfg.methods) results.push_back(run_ensemble(t, m, cfg));
  }
  return results;
}

std::vector<CurvePoint> median_curve(const std::vector<const Trace*>& traces) {
  std::set<std::int64_t> checkpoints;
  for (const Trace* t : traces) {
    for (const auto& row : t->rows) checkpoints.insert(row.evals);
  }
  std::vector<std::size_t> cursor(traces.size(), 0);
  std::vector<CurvePoint> curve;
  for (std::int64_t e : checkpoints) {
    std::vector<double> losses;
    for (std::size_t k = 0; k < traces.size(); ++k) {
      const auto& rows = traces[k]->rows;
      if (rows.empty()) continue;
      while (cursor[k] + 1 < rows.size() && rows[cursor[k] + 1].evals <= e) ++cursor[k];
      losses.push_back(rows[cursor[k]].loss);
    }
    curve.push_back({e, median(std::move(losses))});
  }
  return curve;
}

// ---------------------------------------------------------------------------

bool FlatRow::same_except_timing(const FlatRow& o) const {
  const bool grads_equal = grad_norm.has_value() == o.grad_norm.has_value() &&
                           (!grad_norm || *grad_norm == *o.grad_norm);
  return task == o.task && method == o.method && run == o.run && iter == o.iter &&
         evals == o.evals && loss == o.loss && grads_equal;
}

std::string csv_header() { return "task,method,run,iter,evals,wall_ms,loss,grad_norm"; }

std::vector<FlatRow> flatten(const std::vector<EnsembleResult>& results) {
  std::vector<FlatRow> rows;
  for (const auto& ens : results) {
    for (const auto& rec : ens.records) {
      for (const auto& r : rec.trace.rows) {
        rows.push_back({ens.task, ens.method, rec.run, r.iter, r.evals, r.wall_ms, r.loss,
                        r.grad_norm});
      }
    }
  }
  return rows;
}

namespace {

// Shortest representation that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::kIo, "io: bad number '" + s + "' in results file");
  }
  return v;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json surrogate_json(const SurrogateConfig& s) {
  return {{"kind", to_string(s.kind)},
          {"hidden", s.hidden},
          {"activation", to_string(s.activation)},
          {"head", to_string(s.head)},
          {"quadratic_init_scale", s.quadratic_init_scale}};
}

json run_json(const RunConfig& c) {
  const auto& z = c.zerograds;
  json j = {
      {"method", c.method},
      {"budget_evals", c.budget_evals},
      {"seed", c.seed},
      {"sigma_outer", optional_json(c.sigma_outer)},
      {"sigma_inner_ratio", c.sigma_inner_ratio},
      {"batch_size", optional_json(c.batch_size)},
      {"log_every", c.log_every},
      {"zerograds",
       {{"surrogate", surrogate_json(z.surrogate)},
        {"lr_surrogate", z.lr_surrogate},
        {"lr_param", z.lr_param},
        {"k_inner", z.k_inner},
        {"warmup", z.warmup},
        {"locality", z.locality == LocalitySampling::kImportance ? "importance" : "uniform"},
        {"normalize_output", z.normalize_output}}},
      {"spsa", {{"c_frac", c.spsa.c_frac}, {"lr", c.spsa.lr}}},
      {"fd", {{"eps_frac", c.fd.eps_frac}, {"lr", c.fd.lr}}},
      {"fr22", {{"sigma", optional_json(c.fr22.sigma)}, {"lr", c.fr22.lr}}},
      {"sa",
       {{"t0", optional_json(c.sa.t0)},
        {"alpha", c.sa.alpha},
        {"sigma_prop_frac", c.sa.sigma_prop_frac}}},
      {"ga",
       {{"population", c.ga.population},
        {"sigma_mut_frac", c.ga.sigma_mut_frac},
        {"mutation_rate", optional_json(c.ga.mutation_rate)},
        {"crossover_rate", c.ga.crossover_rate},
        {"tournament", c.ga.tournament}}},
  };
  if (c.initial_theta) {
    j["initial_theta"] = std::vector<double>(c.initial_theta->begin(), c.initial_theta->end());
  }
  return j;
}

json bench_json(const BenchmarkConfig& cfg) {
  json run = run_json(cfg.run);
  // Set per run from the fields above.
  for (const char* key : {"method", "budget_evals", "seed"}) run.erase(key);
  return {{"tasks", cfg.tasks},   {"methods", cfg.methods}, {"budget_evals", cfg.budget_evals},
          {"runs", cfg.runs},     {"base_seed", cfg.base_seed}, {"format", cfg.format},
          {"run", std::move(run)}};
}

json trace_row_json(const TraceRow& r) {
  return {{"iter", r.iter},
          {"evals", r.evals},
          {"wall_ms", r.wall_ms},
          {"loss", r.loss},
          {"grad_norm", optional_json(r.grad_norm)}};
}

}  // namespace

std::string config_json(const BenchmarkConfig& cfg) { return bench_json(cfg).dump(); }
std::string run_config_json(const RunConfig& cfg) { return run_json(cfg).dump(); }

void write_csv(std::ostream& out, const std::vector<EnsembleResult>& results,
               const std::string& config_json_text) {
  out << "# schema_version=" << kSchemaVersion << "\n";
  out << "# config=" << config_json_text << "\n";
  out << csv_header() << "\n";
  for (const auto& row : flatten(results)) {
    out << row.task << ',' << row.method << ',' << row.run << ',' << row.iter << ','
        << row.evals << ',' << format_double(row.wall_ms) << ',' << format_double(row.loss)
        << ',';
    if (row.grad_norm) out << format_double(*row.grad_norm);
    out << '\n';
  }
}

void write_json(std::ostream& out, const std::vector<EnsembleResult>& results,
                const std::string& config_json_text) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["config"] = json::parse(config_json_text);
  doc["ensembles"] = json::array();
  for (const auto& ens : results) {
    json e;
    e["task"] = ens.task;
    e["method"] = ens.method;
    e["runs"] = ens.runs;
    e["final_losses"] = ens.final_losses;
    json curve = json::array();
    for (const auto& p : ens.median_curve) curve.push_back({p.evals, p.loss});
    e["median_curve"] = std::move(curve);
    e["wall_time_ms"] = {{"min", ens.wall.min_ms},
                         {"median", ens.wall.median_ms},
                         {"max", ens.wall.max_ms},
                         {"total", ens.wall.total_ms}};
    json runs = json::array();
    for (const auto& rec : ens.records) {
      json r = {{"run", rec.run},
                {"seed", rec.seed},
                {"final_loss", rec.final_loss},
                {"final_distance", optional_json(rec.final_distance)},
                {"aborted", rec.aborted},
                {"diagnostic", rec.diagnostic},
                {"wall_ms", rec.wall_ms}};
      json rows = json::array();
      for (const auto& row : rec.trace.rows) rows.push_back(trace_row_json(row));
      r["rows"] = std::move(rows);
      runs.push_back(std::move(r));
    }
    e["run_traces"] = std::move(runs);
    doc["ensembles"].push_back(std::move(e));
  }
  out << doc.dump(2) << "\n";
}

void export_results(const std::vector<EnsembleResult>& results, const BenchmarkConfig& cfg) {
  const std::string config = config_json(cfg);
  auto write = [&](std::ostream& os) {
    if (cfg.format == "json") {
      write_json(os, results, config);
    } else {
      write_csv(os, results, config);
    }
  };
  if (cfg.output.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream file(cfg.output);
  if (!file) throw Error(ErrorKind::kIo, "io: cannot open " + cfg.output + " for writing");
  write(file);
  if (!file) throw Error(ErrorKind::kIo, "io: write failed for " + cfg.output);
}

std::vector<FlatRow> parse_csv(std::istream& in) {
  std::vector<FlatRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != csv_header()) throw Error(ErrorKind::kIo, "io: unexpected CSV header");
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 8) throw Error(ErrorKind::kIo, "io: CSV row has wrong column count");
    FlatRow r;
    r.task = cells[0];
    r.method = cells[1];
    r.run = std::stoi(cells[2]);
    r.iter = std::stoll(cells[3]);
    r.evals = std::stoll(cells[4]);
    r.wall_ms = parse_double(cells[5]);
    r.loss = parse_double(cells[6]);
    if (!cells[7].empty()) r.grad_norm = parse_double(cells[7]);
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw Error(ErrorKind::kIo, "io: CSV header missing");
  return rows;
}

std::vector<FlatRow> parse_json(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kIo, std::string("io: bad JSON: ") + e.what());
  }
  if (doc.value("schema_version", 0) != kSchemaVersion) {
    throw Error(ErrorKind::kIo, "io: unsupported schema_version");
  }
  std::vector<FlatRow> rows;
  for (const auto& e : doc.at("ensembles")) {
    for (const auto& rec : e.at("run_traces")) {
      for (const auto& row : rec.at("rows")) {
        FlatRow r;
        r.task = e.at("task").get<std::string>();
        r.method = e.at("method").get<std::string>();
        r.run = rec.at("run").get<int>();
        r.iter = row.at("iter").get<std::int64_t>();
        r.evals = row.at("evals").get<std::int64_t>();
        r.wall_ms = row.at("wall_ms").get<double>();
        r.loss = row.at("loss").get<double>();
        if (!row.at("grad_norm").is_null()) r.grad_norm = row.at("grad_norm").get<double>();
        rows.push_back(std::move(r));
      }
    }
  }
  return rows;
}

}  // namespace zg
