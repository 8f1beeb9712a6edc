// Command-line front end for the benchmark harness.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dagbench/bench.hpp"
#include "dagbench/errors.hpp"

namespace {

using namespace dagbench;

struct CommonOptions {
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::vector<std::string> formats{"csv", "md"};
  bool trace = false;
  bool no_timing = false;
  std::optional<int> reps;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--jobs,-j", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out,-o", opts.out, "Output directory");
  cmd->add_option("--format", opts.formats, "Summary formats")
      ->check(CLI::IsMember({"csv", "md", "markdown", "json"}))
      ->delimiter(',');
  cmd->add_flag("--trace", opts.trace, "Write solver traces to trace.jsonl in the output directory");
  cmd->add_flag("--no-timing", opts.no_timing, "Record runtime as 0 for byte-identical reruns");
  cmd->add_option("--reps", opts.reps, "Override datasets per cell")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", opts.seed, "Override the base seed");
}

void apply_common(BenchConfig& cfg, const CommonOptions& opts) {
  if (opts.jobs) cfg.jobs = *opts.jobs;
  if (opts.out) cfg.out_dir = *opts.out;
  if (opts.reps) cfg.reps = *opts.reps;
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.no_timing) cfg.timing = false;
}

std::vector<ReportFormat> formats_of(const CommonOptions& opts) {
  std::vector<ReportFormat> out;
  for (const auto& f : opts.formats) out.push_back(parse_report_format(f));
  return out;
}

int finish(const BenchConfig& cfg, const std::vector<EvalRecord>& records, const CommonOptions& opts,
           const nlohmann::json& extra = {}) {
  const bool ok = write_reports(cfg, records, formats_of(opts), extra);
  std::cout << "wrote " << records.size() << " trial rows to " << cfg.out_dir << "\n";
  if (!ok) std::cerr << "error: some cells have no converged trial; see manifest.json\n";
  return ok ? 0 : 2;
}

std::vector<EvalRecord> run_with_trace(const BenchConfig& cfg, bool trace) {
  if (!trace) return run_trials(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream out(std::filesystem::path(cfg.out_dir) / "trace.jsonl");
  return run_trials(cfg, [&out](const std::string& line) { out << line << '\n'; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark harness for continuous DAG structure learners"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string run_config;
  auto* run = app.add_subcommand("run", "Run a synthetic benchmark matrix");
  run->add_option("--config,-c", run_config, "Config file or preset name (" + preset_names().front() + ")")
      ->required();
  add_common(run, run_opts);

  CommonOptions sachs_opts;
  std::string sachs_data;
  std::string sachs_graph;
  std::string sachs_config;
  bool log1p = false;
  auto* sachs = app.add_subcommand("sachs", "Run learners on the real protein-signaling data");
  sachs->add_option("--data", sachs_data, "Sachs CSV (11 named columns)")->required()->check(CLI::ExistingFile);
  sachs->add_option("--graph", sachs_graph, "Ground-truth edge list (default: bundled consensus graph)")
      ->check(CLI::ExistingFile);
  sachs->add_option("--config,-c", sachs_config, "Config supplying learners and grid (default: preset)");
  sachs->add_flag("--log1p", log1p, "Apply log(1+x) to every column");
  add_common(sachs, sachs_opts);

  CommonOptions semi_opts;
  std::string semi_graph;
  std::string semi_config;
  std::string semi_label;
  auto* semi = app.add_subcommand("semisynth", "Run the scenario matrix on a fixed ground-truth graph");
  semi->add_option("--graph", semi_graph, "Edge-list file")->required()->check(CLI::ExistingFile);
  semi->add_option("--config,-c", semi_config, "Config file or preset name")->required();
  semi->add_option("--label", semi_label, "Graph label in reports (default: file stem)");
  add_common(semi, semi_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      BenchConfig cfg = load_bench_config(run_config);
      apply_common(cfg, run_opts);
      return finish(cfg, run_with_trace(cfg, run_opts.trace), run_opts);
    }
    if (*sachs) {
      BenchConfig cfg = sachs_config.empty() ? preset_config(preset_names().front()) : load_bench_config(sachs_config);
      apply_common(cfg, sachs_opts);
      const SachsData s = sachs_graph.empty() ? load_sachs(sachs_data, log1p) : load_sachs(sachs_data, sachs_graph, log1p);
      std::cout << "loaded " << s.data.n() << " samples, " << s.data.d() << " nodes, " << s.truth.num_edges()
                << " true edges\n";
      const auto records = run_on_dataset(cfg, s.data, s.truth, "sachs", log1p ? "real(log1p)" : "real");
      return finish(cfg, records, sachs_opts,
                    {{"data", sachs_data}, {"log1p", log1p}, {"n", s.data.n()}, {"true_edges", s.truth.num_edges()}});
    }
    BenchConfig cfg = load_bench_config(semi_config);
    cfg.fixed_graph = read_edge_list_file(semi_graph);
    cfg.fixed_graph_label = semi_label.empty() ? std::filesystem::path(semi_graph).stem().string() : semi_label;
    cfg.graphs.clear();
    apply_common(cfg, semi_opts);
    return finish(cfg, run_with_trace(cfg, semi_opts.trace), semi_opts, {{"graph_file", semi_graph}});
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
