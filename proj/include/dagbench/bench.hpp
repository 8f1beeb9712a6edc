#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dagbench/graph.hpp"
#include "dagbench/learners.hpp"
#include "dagbench/misspec.hpp"
#include "dagbench/scm.hpp"

namespace dagbench {

struct GraphSpec {
  GraphKind kind;
  int d = 10;
};

/// One dataset-level scenario: a single transform, a composition, or the
/// nonlinear mechanism-violation generator.
struct ScenarioEntry {
  std::vector<ScenarioSpec> specs;

  bool mechanism_violation() const;
  /// "vanilla", "missing(beta=0.01)", "unfaithful+missing(beta=0.01)", ...
  std::string label() const;
};

struct LearnerEntry {
  /// Report label; defaults to the method name.
  std::string name;
  LearnerConfig cfg;
  /// Random baseline expected degree; unset means (d - 1) / 2, a fair coin
  /// per node pair.
  std::optional<double> random_degree;

  std::string label() const { return name.empty() ? to_string(cfg.method) : name; }
};

enum class Selection { Oracle, Fixed };

struct BenchConfig {
  std::vector<GraphSpec> graphs;
  std::vector<ScenarioEntry> scenarios;
  std::vector<LearnerEntry> learners;
  int n = 2000;
  int reps = 10;
  std::uint64_t seed = 0;
  std::string out_dir = "bench_out";
  int jobs = 1;
  /// Oracle: minimum-SHD lambda1 over the grid (ties to the smaller value).
  /// Fixed: each learner's own lambda1.
  Selection selection = Selection::Oracle;
  std::vector<double> lambda_grid = lambda1_grid();
  NoiseDist noise = NoiseDist::Gaussian;
  /// When false, runtime_s is written as 0 so reruns are byte-identical.
  bool timing = true;
  bool compute_sid = true;
  /// Semi-synthetic runs: every trial uses this graph instead of `graphs`.
  std::optional<Dag> fixed_graph;
  std::string fixed_graph_label = "fixed";

  void validate() const;
};

BenchConfig parse_bench_config(const nlohmann::json& doc);
nlohmann::json bench_config_to_json(const BenchConfig& cfg);
/// A preset name ("er2-d10") or a path to a JSON config file.
BenchConfig load_bench_config(const std::string& preset_or_path);
BenchConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

struct EvalRecord {
  std::string graph;
  int d = 0;
  int k = 0;
  std::string scenario;
  std::string learner;
  std::uint64_t seed = 0;
  int rep = 0;
  double lambda1 = 0.0;
  int shd = 0;
  int sid = 0;
  double runtime_s = 0.0;
  bool converged = true;
  std::string error;
};

/// Sees every learner output, including non-selected grid points. The record
/// carries the cell keys and the grid point's lambda1. Calls are serialized.
using LearnerObserver = std::function<void(const EvalRecord& cell, const LearnedGraph& output)>;

/// Sort key (graph, d, scenario, learner, rep).
bool record_less(const EvalRecord& a, const EvalRecord& b);

/// Runs every (graph, scenario, rep) trial and every learner on it. Records
/// come back sorted by record_less, independent of cfg.jobs. `trace` receives
/// one JSON line per solver round when set.
std::vector<EvalRecord> run_trials(const BenchConfig& cfg,
                                   const std::function<void(const std::string&)>& trace = {},
                                   const LearnerObserver& observer = {});

/// Runs the learners on a fixed dataset (real data); reps only affects Random.
std::vector<EvalRecord> run_on_dataset(const BenchConfig& cfg, const Dataset& data, const Dag& truth,
                                       const std::string& graph_label, const std::string& scenario_label);

struct SummaryRow {
  std::string graph;
  int d = 0;
  std::string scenario;
  std::string learner;
  /// Attempted trials; `failures` of them carry no metrics.
  int trials = 0;
  int failures = 0;
  double shd_mean = 0.0;
  double shd_std = 0.0;
  double sid_mean = 0.0;
  double sid_std = 0.0;
  double runtime_mean = 0.0;
  double runtime_std = 0.0;
};

/// Mean and sample standard deviation per (graph, d, scenario, learner) over
/// converged records; failed records only increment `failures`.
std::vector<SummaryRow> summarize(const std::vector<EvalRecord>& records);
/// "2.0±1.0".
std::string format_mean_std(double mean, double std);

void write_trials_csv(std::ostream& out, const std::vector<EvalRecord>& records);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_summary_markdown(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_summary_json(std::ostream& out, const std::vector<SummaryRow>& rows);

enum class ReportFormat { Csv, Markdown, Json };
ReportFormat parse_report_format(const std::string& name);

/// Writes trials.csv, summary.{csv,md,json} (per `formats`) and manifest.json
/// into cfg.out_dir. Returns false when some cell has no converged trial.
bool write_reports(const BenchConfig& cfg, const std::vector<EvalRecord>& records,
                   const std::vector<ReportFormat>& formats, const nlohmann::json& extra_manifest = {});

struct SachsData {
  Dataset data;
  Dag truth;
};
/// Canonical column order of the bundled file and the edge-list asset.
const std::vector<std::string>& sachs_columns();
/// Loads the 11-column protein table (columns reordered to the canonical
/// order) and the consensus graph from `edges_path`.
SachsData load_sachs(const std::string& csv_path, const std::string& edges_path, bool log1p = false);
/// Same, with the consensus graph from the bundled asset directory.
SachsData load_sachs(const std::string& csv_path, bool log1p = false);
std::string default_asset_dir();

std::string version_string();

}  // namespace dagbench
