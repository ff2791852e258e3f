#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zerograds/optimizers.hpp"

namespace zg {

inline constexpr int kSchemaVersion = 1;

struct BenchmarkConfig {
  std::vector<std::string> tasks;
  std::vector<std::string> methods;
  std::int64_t budget_evals = 1000;
  int runs = 10;
  std::uint64_t base_seed = 0;
  std::string output;           ///< empty: write to stdout
  std::string format = "csv";   ///< csv | json
  int jobs = 0;                 ///< 0: one worker per logical core
  /// Template for every run; method, seed and budget are overwritten.
  RunConfig run;

  void validate() const;
};

/// One run of an ensemble.
struct RunRecord {
  int run = 0;
  std::uint64_t seed = 0;
  Trace trace;
  double final_loss = 0.0;
  /// max |theta - theta*| when the task knows its optimum.
  std::optional<double> final_distance;
  bool aborted = false;
  std::string diagnostic;
  double wall_ms = 0.0;
};

struct CurvePoint {
  std::int64_t evals = 0;
  double loss = 0.0;
};

struct WallTimeStats {
  double min_ms = 0.0;
  double median_ms = 0.0;
  double max_ms = 0.0;
  double total_ms = 0.0;
};

struct EnsembleResult {
  std::string task;
  std::string method;
  int runs = 0;
  std::vector<RunRecord> records;  ///< ordered by run index
  std::vector<CurvePoint> median_curve;
  std::vector<double> final_losses;
  WallTimeStats wall;
};

/// Runs `cfg.runs` independent runs with seeds base_seed + i. Every run
/// builds its own task from `task_spec` with its own seed. Aborted runs are
/// kept with their diagnostic.
EnsembleResult run_ensemble(const std::string& task_spec, const std::string& method,
                            const BenchmarkConfig& cfg);

/// Every (task, method) pair, tasks outer, methods inner, same budget each.
std::vector<EnsembleResult> run_benchmark(const BenchmarkConfig& cfg);

/// Median loss over runs at every distinct eval count seen in any trace,
/// sorted ascending. A run contributes its last row at or before the
/// checkpoint; checkpoints before a run's first row use that first row.
std::vector<CurvePoint> median_curve(const std::vector<const Trace*>& traces);

// ---------------------------------------------------------------------------
// Export. CSV columns: task,method,run,iter,evals,wall_ms,loss,grad_norm.
// The header is preceded by '#' lines carrying schema_version and the
// resolved configuration as compact JSON.

struct FlatRow {
  std::string task;
  std::string method;
  int run = 0;
  std::int64_t iter = 0;
  std::int64_t evals = 0;
  double wall_ms = 0.0;
  double loss = 0.0;
  std::optional<double> grad_norm;

  bool same_except_timing(const FlatRow& other) const;
};

std::string csv_header();
std::vector<FlatRow> flatten(const std::vector<EnsembleResult>& results);

/// Resolved configuration (all defaults filled in) as compact JSON text.
std::string config_json(const BenchmarkConfig& cfg);
std::string run_config_json(const RunConfig& cfg);

void write_csv(std::ostream& out, const std::vector<EnsembleResult>& results,
               const std::string& config_json_text);
void write_json(std::ostream& out, const std::vector<EnsembleResult>& results,
                const std::string& config_json_text);
/// Writes to cfg.output in cfg.format (stdout when output is empty).
void export_results(const std::vector<EnsembleResult>& results, const BenchmarkConfig& cfg);

/// Data rows of a CSV written by write_csv. Comment lines are skipped.
std::vector<FlatRow> parse_csv(std::istream& in);
/// Rows of a JSON document written by write_json.
std::vector<FlatRow> parse_json(std::istream& in);

}  // namespace zg
