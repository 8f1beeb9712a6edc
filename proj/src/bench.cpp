#include "dagbench/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>
#include <tuple>

#include "dagbench/errors.hpp"
#include "dagbench/metrics.hpp"
#include "dagbench/rng.hpp"

#ifndef DAGBENCH_VERSION
#define DAGBENCH_VERSION "0.0.0"
#endif
#ifndef DAGBENCH_ASSET_DIR
#define DAGBENCH_ASSET_DIR "assets"
#endif

namespace dagbench {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- config ---

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ParameterError(where + ": expected an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) throw ParameterError(where + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParameterError(std::string("config: key '") + key + "' has the wrong type");
  }
}

ScenarioSpec parse_scenario_spec(const json& item) {
  if (item.is_string()) return {parse_scenario_kind(item.get<std::string>()), {}};
  if (!item.is_object() || !item.contains("kind")) throw ParameterError("scenario: expected a name or {\"kind\": ...}");
  ScenarioSpec spec{parse_scenario_kind(item.at("kind").get<std::string>()), {}};
  for (const auto& kv : item.items()) {
    if (kv.key() == "kind") continue;
    if (!kv.value().is_number()) throw ParameterError("scenario parameter '" + kv.key() + "' must be a number");
    spec.params[kv.key()] = kv.value().get<double>();
  }
  spec.validate();
  return spec;
}

ScenarioEntry parse_scenario_entry(const json& item) {
  ScenarioEntry entry;
  if (item.is_object() && item.contains("compose")) {
    check_keys(item, {"compose"}, "scenario");
    for (const json& sub : item.at("compose")) entry.specs.push_back(parse_scenario_spec(sub));
  } else {
    entry.specs.push_back(parse_scenario_spec(item));
  }
  entry.label();  // validates the combination
  return entry;
}

json scenario_entry_to_json(const ScenarioEntry& entry) {
  auto spec_json = [](const ScenarioSpec& spec) {
    json obj = {{"kind", to_string(spec.kind)}};
    for (const auto& [key, value] : spec.params) obj[key] = value;
    return obj;
  };
  if (entry.specs.size() == 1) return spec_json(entry.specs.front());
  json list = json::array();
  for (const auto& spec : entry.specs) list.push_back(spec_json(spec));
  return {{"compose", list}};
}

void parse_inner(const json& obj, InnerConfig& inner, const std::string& where) {
  check_keys(obj, {"max_iters", "tol", "step"}, where);
  inner.max_iters = get_or(obj, "max_iters", inner.max_iters);
  inner.tol = get_or(obj, "tol", inner.tol);
  inner.step = get_or(obj, "step", inner.step);
}

LearnerEntry parse_learner(const json& item) {
  LearnerEntry entry;
  if (item.is_string()) {
    entry.cfg.method = parse_method(item.get<std::string>());
    return entry;
  }
  check_keys(item,
             {"method", "name", "lambda1", "lambda2", "tau", "constraint", "alpha", "s", "sort_regression",
              "random_degree", "alm", "central", "inner"},
             "learner");
  if (!item.contains("method")) throw ParameterError("learner: missing 'method'");
  LearnerConfig& cfg = entry.cfg;
  cfg.method = parse_method(item.at("method").get<std::string>());
  entry.name = get_or<std::string>(item, "name", "");
  cfg.lambda1 = get_or(item, "lambda1", cfg.lambda1);
  cfg.lambda2 = get_or(item, "lambda2", cfg.lambda2);
  cfg.tau = get_or(item, "tau", cfg.tau);
  if (item.contains("constraint")) cfg.constraint.type = parse_acyclicity_type(item.at("constraint").get<std::string>());
  if (item.contains("alpha")) cfg.constraint.alpha = item.at("alpha").get<double>();
  cfg.constraint.s = get_or(item, "s", cfg.constraint.s);
  if (item.contains("sort_regression")) {
    cfg.sort_regression = parse_sort_regression(item.at("sort_regression").get<std::string>());
  }
  if (item.contains("random_degree")) entry.random_degree = item.at("random_degree").get<double>();
  if (item.contains("alm")) {
    const json& a = item.at("alm");
    check_keys(a, {"eta", "gamma", "eps_h", "max_outer", "mu0", "inner"}, "learner.alm");
    cfg.alm.eta = get_or(a, "eta", cfg.alm.eta);
    cfg.alm.gamma = get_or(a, "gamma", cfg.alm.gamma);
    cfg.alm.eps_h = get_or(a, "eps_h", cfg.alm.eps_h);
    cfg.alm.max_outer = get_or(a, "max_outer", cfg.alm.max_outer);
    cfg.alm.mu0 = get_or(a, "mu0", cfg.alm.mu0);
    if (a.contains("inner")) parse_inner(a.at("inner"), cfg.alm.inner, "learner.alm.inner");
  }
  if (item.contains("central")) {
    const json& c = item.at("central");
    check_keys(c, {"s", "mu", "inner"}, "learner.central");
    cfg.central.s = get_or(c, "s", cfg.central.s);
    cfg.central.mu = get_or(c, "mu", cfg.central.mu);
    if (c.contains("inner")) parse_inner(c.at("inner"), cfg.central.inner, "learner.central.inner");
  }
  if (item.contains("inner")) parse_inner(item.at("inner"), cfg.inner, "learner.inner");
  cfg.validate();
  return entry;
}

json inner_to_json(const InnerConfig& inner) {
  return {{"max_iters", inner.max_iters}, {"tol", inner.tol}, {"step", inner.step}};
}

json learner_to_json(const LearnerEntry& entry) {
  const LearnerConfig& cfg = entry.cfg;
  json obj = {
      {"method", to_string(cfg.method)},
      {"name", entry.label()},
      {"lambda1", cfg.lambda1},
      {"lambda2", cfg.lambda2},
      {"tau", cfg.tau},
      {"constraint", cfg.constraint.label()},
      {"s", cfg.constraint.s},
      {"sort_regression", to_string(cfg.sort_regression)},
      {"alm",
       {{"eta", cfg.alm.eta},
        {"gamma", cfg.alm.gamma},
        {"eps_h", cfg.alm.eps_h},
        {"max_outer", cfg.alm.max_outer},
        {"mu0", cfg.alm.mu0},
        {"inner", inner_to_json(cfg.alm.inner)}}},
      {"central", {{"s", cfg.central.s}, {"mu", cfg.central.mu}, {"inner", inner_to_json(cfg.central.inner)}}},
      {"inner", inner_to_json(cfg.inner)},
  };
  if (cfg.constraint.alpha) obj["alpha"] = *cfg.constraint.alpha;
  if (entry.random_degree) obj["random_degree"] = *entry.random_degree;
  return obj;
}

// ---------------------------------------------------------------- trials ---

// Expected degree when every node pair carries an edge with probability 1/2.
double coin_flip_degree(int d) { return (d - 1) / 2.0; }

struct TrialContext {
  std::string graph;
  int d = 0;
  int k = 0;
  std::string scenario;
  int rep = 0;
  std::uint64_t data_seed = 0;
  std::uint64_t learner_base = 0;
};

EvalRecord evaluate_learner(const BenchConfig& cfg, const LearnerEntry& entry, const Dataset& data, const Dag& truth,
                            const TrialContext& ctx,
                            const std::function<void(const std::string&)>& trace,
                            const LearnerObserver& observer) {
  EvalRecord rec;
  rec.graph = ctx.graph;
  rec.d = ctx.d;
  rec.k = ctx.k;
  rec.scenario = ctx.scenario;
  rec.learner = entry.label();
  rec.seed = ctx.data_seed;
  rec.rep = ctx.rep;

  LearnerConfig lc = entry.cfg;
  lc.random_degree = entry.random_degree ? *entry.random_degree : coin_flip_degree(ctx.d);
  const bool grid = cfg.selection == Selection::Oracle && uses_lambda_grid(lc.method) &&
                    !(lc.sort_regression == SortRegression::AdaptiveLassoBic &&
                      (lc.method == Method::VarSortnRegress || lc.method == Method::R2SortnRegress));
  std::vector<double> lambdas = grid ? cfg.lambda_grid : std::vector<double>{lc.lambda1};
  std::sort(lambdas.begin(), lambdas.end());
  if (lc.method == Method::Random) lambdas = {0.0};
  const std::uint64_t learner_seed = derive_seed(ctx.learner_base, {hash_key(rec.learner)});

  std::optional<LearnedGraph> best;
  int best_shd = 0;
  for (double lambda : lambdas) {
    lc.lambda1 = lambda;
    if (trace) {
      lc.trace = [&trace, &rec, lambda](const TraceRecord& t) {
        const json line = {{"graph", rec.graph},     {"d", rec.d},         {"scenario", rec.scenario},
                           {"learner", rec.learner}, {"rep", rec.rep},     {"lambda1", lambda},
                           {"iteration", t.iteration}, {"objective", t.objective}, {"h", t.h},
                           {"alpha", t.alpha},       {"mu", t.mu}};
        trace(line.dump());
      };
    }
    try {
      LearnedGraph lg = run_learner(data, lc, learner_seed);
      if (observer) {
        EvalRecord point = rec;
        point.lambda1 = lambda;
        observer(point, lg);
      }
      if (!lg.converged) {
        rec.error = "lambda1=" + std::to_string(lambda) + ": solver did not converge";
        continue;
      }
      const int s = shd(lg.dag, truth);
      if (!best || s < best_shd) {
        best_shd = s;
        best = std::move(lg);
      }
    } catch (const std::exception& e) {
      rec.error = "lambda1=" + std::to_string(lambda) + ": " + e.what();
    }
  }
  if (!best) {
    rec.converged = false;
    return rec;
  }
  rec.error.clear();
  rec.lambda1 = best->method == Method::Random ? 0.0 : best->lambda1;
  rec.shd = best_shd;
  rec.sid = cfg.compute_sid ? sid(best->dag, truth) : 0;
  rec.runtime_s = cfg.timing ? best->runtime_s : 0.0;
  return rec;
}

Dataset make_trial_data(const BenchConfig& cfg, const ScenarioEntry& scenario, const Dag& truth,
                        std::uint64_t scm_seed, std::uint64_t data_seed) {
  const NoiseSpec noise =
      cfg.noise == NoiseDist::Gaussian ? NoiseSpec::gaussian(truth.size()) : NoiseSpec::exponential(truth.size());
  if (scenario.mechanism_violation()) {
    Dataset data = sample_gp(GpScm{truth, 1.0, noise}, cfg.n, data_seed);
    data.meta.scenario = scenario.label();
    return data;
  }
  const LinearScm scm = make_linear_scm(truth, noise, scm_seed);
  return compose(scenario.specs, scm, cfg.n, data_seed);
}

int expected_degree(const Dag& g) {
  return g.size() == 0 ? 0 : static_cast<int>(std::lround(2.0 * g.num_edges() / g.size()));
}

template <typename Task>
void run_parallel(std::size_t count, int jobs, const Task& task) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < count; t = next++) task(t);
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------- output ---

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return {std::nan(""), std::nan("")};
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

std::string cell(double mean, double std, int trials) {
  return trials > 0 ? format_mean_std(mean, std) : "n/a";
}

std::string sachs_key(const std::string& name) {
  std::string key;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  static const std::map<std::string, std::string> aliases = {
      {"raf", "praf"},          {"praf", "praf"},         {"mek", "pmek"},    {"mek12", "pmek"},
      {"pmek", "pmek"},         {"plcg", "plcg"},         {"plcgamma", "plcg"}, {"pip2", "pip2"},
      {"pip3", "pip3"},         {"erk", "p4442"},         {"erk12", "p4442"}, {"p4442", "p4442"},
      {"akt", "pakts473"},      {"pakts473", "pakts473"}, {"pka", "pka"},     {"pkc", "pkc"},
      {"p38", "p38"},           {"jnk", "pjnk"},          {"pjnk", "pjnk"}};
  const auto it = aliases.find(key);
  return it == aliases.end() ? std::string() : it->second;
}

}  // namespace

// ------------------------------------------------------------ public API ---

bool ScenarioEntry::mechanism_violation() const {
  return std::any_of(specs.begin(), specs.end(),
                     [](const ScenarioSpec& s) { return s.kind == ScenarioKind::MechanismViolation; });
}

std::string ScenarioEntry::label() const {
  if (mechanism_violation()) {
    if (specs.size() != 1) throw ParameterError("mechanism violation cannot be combined with other scenarios");
    return to_string(ScenarioKind::MechanismViolation);
  }
  return composition_tag(specs);
}

void BenchConfig::validate() const {
  if (reps < 1) throw ParameterError("config: reps must be >= 1");
  if (jobs < 1) throw ParameterError("config: jobs must be >= 1");
  if (!fixed_graph && graphs.empty()) throw ParameterError("config: no graphs");
  if (scenarios.empty()) throw ParameterError("config: no scenarios");
  if (learners.empty()) throw ParameterError("config: no learners");
  if (lambda_grid.empty()) throw ParameterError("config: empty lambda grid");
  for (double l : lambda_grid) {
    if (!(l >= 0.0)) throw ParameterError("config: lambda grid values must be >= 0");
  }
  int max_d = fixed_graph ? fixed_graph->size() : 0;
  for (const GraphSpec& g : graphs) {
    if (g.d < 2) throw ParameterError("config: graphs need d >= 2");
    max_d = std::max(max_d, g.d);
  }
  if (n < max_d + 1) throw ParameterError("config: n must be at least d + 1");
  std::set<std::string> labels;
  for (const ScenarioEntry& s : scenarios) {
    for (const ScenarioSpec& spec : s.specs) spec.validate();
    if (!labels.insert(s.label()).second) throw ParameterError("config: duplicate scenario " + s.label());
    if (s.mechanism_violation() && n > kMaxGpSamples) {
      throw ParameterError("config: mechanism violation supports at most " + std::to_string(kMaxGpSamples) +
                           " samples");
    }
  }
  labels.clear();
  for (const LearnerEntry& l : learners) {
    l.cfg.validate();
    if (!labels.insert(l.label()).second) throw ParameterError("config: duplicate learner name " + l.label());
  }
}

BenchConfig parse_bench_config(const json& doc) {
  check_keys(doc,
             {"graphs", "scenarios", "learners", "n", "reps", "seed", "out", "jobs", "selection", "lambda_grid",
              "noise", "timing", "sid"},
             "config");
  BenchConfig cfg;
  cfg.graphs.clear();
  if (doc.contains("graphs")) {
    for (const json& g : doc.at("graphs")) {
      check_keys(g, {"kind", "d"}, "graph");
      cfg.graphs.push_back({GraphKind::parse(g.at("kind").get<std::string>()), get_or(g, "d", 10)});
    }
  }
  if (doc.contains("scenarios")) {
    for (const json& s : doc.at("scenarios")) cfg.scenarios.push_back(parse_scenario_entry(s));
  } else {
    cfg.scenarios.push_back({});
  }
  if (doc.contains("learners")) {
    for (const json& l : doc.at("learners")) cfg.learners.push_back(parse_learner(l));
  }
  cfg.n = get_or(doc, "n", cfg.n);
  cfg.reps = get_or(doc, "reps", cfg.reps);
  cfg.seed = get_or<std::uint64_t>(doc, "seed", cfg.seed);
  cfg.out_dir = get_or(doc, "out", cfg.out_dir);
  cfg.jobs = get_or(doc, "jobs", cfg.jobs);
  if (doc.contains("selection")) {
    const auto sel = doc.at("selection").get<std::string>();
    if (sel == "oracle") {
      cfg.selection = Selection::Oracle;
    } else if (sel == "fixed") {
      cfg.selection = Selection::Fixed;
    } else {
      throw ParameterError("config: selection must be 'oracle' or 'fixed'");
    }
  }
  cfg.lambda_grid = get_or(doc, "lambda_grid", cfg.lambda_grid);
  if (doc.contains("noise")) cfg.noise = parse_noise_dist(doc.at("noise").get<std::string>());
  cfg.timing = get_or(doc, "timing", cfg.timing);
  cfg.compute_sid = get_or(doc, "sid", cfg.compute_sid);
  return cfg;
}

json bench_config_to_json(const BenchConfig& cfg) {
  json graphs = json::array();
  for (const GraphSpec& g : cfg.graphs) graphs.push_back({{"kind", g.kind.label()}, {"d", g.d}});
  json scenarios = json::array();
  for (const ScenarioEntry& s : cfg.scenarios) scenarios.push_back(scenario_entry_to_json(s));
  json learners = json::array();
  for (const LearnerEntry& l : cfg.learners) learners.push_back(learner_to_json(l));
  json doc = {
      {"graphs", graphs},
      {"scenarios", scenarios},
      {"learners", learners},
      {"n", cfg.n},
      {"reps", cfg.reps},
      {"seed", cfg.seed},
      {"out", cfg.out_dir},
      {"jobs", cfg.jobs},
      {"selection", cfg.selection == Selection::Oracle ? "oracle" : "fixed"},
      {"lambda_grid", cfg.lambda_grid},
      {"noise", to_string(cfg.noise)},
      {"timing", cfg.timing},
      {"sid", cfg.compute_sid},
  };
  if (cfg.fixed_graph) {
    json edges = json::array();
    for (const auto& [i, j] : cfg.fixed_graph->edges()) edges.push_back({i, j});
    doc["fixed_graph"] = {{"label", cfg.fixed_graph_label}, {"d", cfg.fixed_graph->size()}, {"edges", edges}};
  }
  return doc;
}

std::vector<std::string> preset_names() { return {"er2-d10"}; }

BenchConfig preset_config(const std::string& name) {
  if (name != "er2-d10") throw ParameterError("unknown preset '" + name + "'");
  return parse_bench_config(json::parse(R"({
    "graphs": [{"kind": "ER-2", "d": 10}],
    "scenarios": ["vanilla", "confounded", "measurement-error", "autoregressive", "heterogeneous",
                  "unfaithful", "scale-variant", "missing", "mechanism-violation"],
    "learners": ["Var-SortnRegress", "R2-SortnRegress", "NOTEARS", "GOLEM-EV", "NoCurl", "DAGMA", "Random"],
    "n": 2000,
    "reps": 10,
    "seed": 0
  })"));
}

BenchConfig load_bench_config(const std::string& preset_or_path) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), preset_or_path) != names.end()) return preset_config(preset_or_path);
  std::ifstream in(preset_or_path);
  if (!in) throw ParameterError("cannot open config '" + preset_or_path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("config '" + preset_or_path + "': " + e.what());
  }
  return parse_bench_config(doc);
}

bool record_less(const EvalRecord& a, const EvalRecord& b) {
  return std::tie(a.graph, a.d, a.scenario, a.learner, a.rep) < std::tie(b.graph, b.d, b.scenario, b.learner, b.rep);
}

std::vector<EvalRecord> run_trials(const BenchConfig& cfg, const std::function<void(const std::string&)>& trace,
                                   const LearnerObserver& observer) {
  cfg.validate();
  struct GraphCell {
    std::string label;
    int d;
    int k;
    std::optional<GraphKind> kind;
  };
  std::vector<GraphCell> cells;
  if (cfg.fixed_graph) {
    cells.push_back({cfg.fixed_graph_label, cfg.fixed_graph->size(), expected_degree(*cfg.fixed_graph), {}});
  } else {
    for (const GraphSpec& g : cfg.graphs) cells.push_back({g.kind.label(), g.d, g.kind.degree, g.kind});
  }
  struct Task {
    std::size_t cell;
    std::size_t scenario;
    int rep;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t s = 0; s < cfg.scenarios.size(); ++s) {
      for (int rep = 0; rep < cfg.reps; ++rep) tasks.push_back({c, s, rep});
    }
  }

  std::mutex trace_mutex;
  std::function<void(const std::string&)> locked_trace;
  if (trace) {
    locked_trace = [&](const std::string& line) {
      const std::lock_guard<std::mutex> lock(trace_mutex);
      trace(line);
    };
  }
  std::mutex observer_mutex;
  LearnerObserver locked_observer;
  if (observer) {
    locked_observer = [&](const EvalRecord& cell, const LearnedGraph& output) {
      const std::lock_guard<std::mutex> lock(observer_mutex);
      observer(cell, output);
    };
  }

  std::vector<std::vector<EvalRecord>> results(tasks.size());
  run_parallel(tasks.size(), cfg.jobs, [&](std::size_t t) {
    const Task& task = tasks[t];
    const GraphCell& cell = cells[task.cell];
    const ScenarioEntry& scenario = cfg.scenarios[task.scenario];
    const auto rep = static_cast<std::uint64_t>(task.rep);
    const std::uint64_t graph_key = hash_key(cell.label);
    const auto d = static_cast<std::uint64_t>(cell.d);
    TrialContext ctx{cell.label, cell.d, cell.k, scenario.label(), task.rep, 0, 0};
    const std::uint64_t scenario_key = hash_key(ctx.scenario);
    ctx.data_seed = derive_seed(cfg.seed, {graph_key, d, scenario_key, rep});
    ctx.learner_base = derive_seed(cfg.seed, {graph_key, d, scenario_key, rep, 7});

    std::optional<Dag> truth;
    std::optional<Dataset> data;
    std::string failure;
    try {
      truth = cfg.fixed_graph ? *cfg.fixed_graph : generate(*cell.kind, cell.d, derive_seed(cfg.seed, {graph_key, d, rep, 0}));
      data = make_trial_data(cfg, scenario, *truth, derive_seed(cfg.seed, {graph_key, d, rep, 1}), ctx.data_seed);
    } catch (const std::exception& e) {
      failure = std::string("data generation: ") + e.what();
    }
    for (const LearnerEntry& entry : cfg.learners) {
      if (!data) {
        EvalRecord rec;
        rec.graph = ctx.graph;
        rec.d = ctx.d;
        rec.k = ctx.k;
        rec.scenario = ctx.scenario;
        rec.learner = entry.label();
        rec.seed = ctx.data_seed;
        rec.rep = ctx.rep;
        rec.converged = false;
        rec.error = failure;
        results[t].push_back(std::move(rec));
        continue;
      }
      results[t].push_back(evaluate_learner(cfg, entry, *data, *truth, ctx, locked_trace, locked_observer));
    }
  });

  std::vector<EvalRecord> records;
  for (auto& r : results) records.insert(records.end(), r.begin(), r.end());
  std::sort(records.begin(), records.end(), record_less);
  return records;
}

std::vector<EvalRecord> run_on_dataset(const BenchConfig& cfg, const Dataset& data, const Dag& truth,
                                       const std::string& graph_label, const std::string& scenario_label) {
  if (data.d() != truth.size()) throw ShapeError("run_on_dataset: data and graph sizes differ");
  if (cfg.learners.empty()) throw ParameterError("config: no learners");
  if (cfg.reps < 1) throw ParameterError("config: reps must be >= 1");
  const int k = expected_degree(truth);
  std::vector<std::pair<const LearnerEntry*, int>> tasks;
  for (const LearnerEntry& entry : cfg.learners) {
    const int runs = entry.cfg.method == Method::Random ? cfg.reps : 1;
    for (int rep = 0; rep < runs; ++rep) tasks.emplace_back(&entry, rep);
  }
  std::vector<EvalRecord> records(tasks.size());
  run_parallel(tasks.size(), cfg.jobs, [&](std::size_t t) {
    const auto [entry, rep] = tasks[t];
    TrialContext ctx{graph_label, truth.size(), k, scenario_label, rep, 0, 0};
    ctx.learner_base = derive_seed(cfg.seed, {hash_key(graph_label), static_cast<std::uint64_t>(rep)});
    records[t] = evaluate_learner(cfg, *entry, data, truth, ctx, {}, {});
  });
  std::sort(records.begin(), records.end(), record_less);
  return records;
}

std::string format_mean_std(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f±%.1f", mean, std);
  return buf;
}

std::vector<SummaryRow> summarize(const std::vector<EvalRecord>& records) {
  std::vector<EvalRecord> sorted = records;
  std::sort(sorted.begin(), sorted.end(), record_less);
  std::vector<SummaryRow> rows;
  for (std::size_t a = 0; a < sorted.size();) {
    std::size_t b = a;
    const EvalRecord& head = sorted[a];
    std::vector<double> shds;
    std::vector<double> sids;
    std::vector<double> times;
    SummaryRow row{head.graph, head.d, head.scenario, head.learner};
    for (; b < sorted.size() && sorted[b].graph == head.graph && sorted[b].d == head.d &&
           sorted[b].scenario == head.scenario && sorted[b].learner == head.learner;
         ++b) {
      ++row.trials;
      if (!sorted[b].converged) {
        ++row.failures;
        continue;
      }
      shds.push_back(sorted[b].shd);
      sids.push_back(sorted[b].sid);
      times.push_back(sorted[b].runtime_s);
    }
    const MeanStd s = mean_std(shds);
    const MeanStd i = mean_std(sids);
    const MeanStd r = mean_std(times);
    row.shd_mean = s.mean;
    row.shd_std = s.std;
    row.sid_mean = i.mean;
    row.sid_std = i.std;
    row.runtime_mean = r.mean;
    row.runtime_std = r.std;
    rows.push_back(row);
    a = b;
  }
  return rows;
}

void write_trials_csv(std::ostream& out, const std::vector<EvalRecord>& records) {
  out << "graph,d,k,scenario,learner,seed,lambda1,shd,sid,runtime_s,converged\n";
  for (const EvalRecord& r : records) {
    out << csv_field(r.graph) << ',' << r.d << ',' << r.k << ',' << csv_field(r.scenario) << ','
        << csv_field(r.learner) << ',' << r.seed << ',';
    if (r.converged) {
      out << fmt("%g", r.lambda1) << ',' << r.shd << ',' << r.sid << ',' << fmt("%.6f", r.runtime_s) << ",true\n";
    } else {
      out << ",,,,false\n";
    }
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "graph,d,scenario,learner,trials,failures,shd,sid,runtime_s,shd_mean,shd_std,sid_mean,sid_std,"
         "runtime_mean,runtime_std\n";
  for (const SummaryRow& r : rows) {
    const int ok = r.trials - r.failures;
    out << csv_field(r.graph) << ',' << r.d << ',' << csv_field(r.scenario) << ',' << csv_field(r.learner) << ','
        << r.trials << ',' << r.failures << ',' << cell(r.shd_mean, r.shd_std, ok) << ','
        << cell(r.sid_mean, r.sid_std, ok) << ',' << (ok > 0 ? fmt("%.2f", r.runtime_mean) + "±" + fmt("%.2f", r.runtime_std) : "n/a")
        << ',' << fmt("%.6g", r.shd_mean) << ',' << fmt("%.6g", r.shd_std) << ',' << fmt("%.6g", r.sid_mean) << ','
        << fmt("%.6g", r.sid_std) << ',' << fmt("%.6g", r.runtime_mean) << ',' << fmt("%.6g", r.runtime_std)
        << '\n';
  }
}

void write_summary_markdown(std::ostream& out, const std::vector<SummaryRow>& rows) {
  // One table per (graph, d): learners as rows, SHD/SID per scenario as columns.
  std::vector<std::pair<std::string, int>> blocks;
  for (const SummaryRow& r : rows) {
    if (std::find(blocks.begin(), blocks.end(), std::make_pair(r.graph, r.d)) == blocks.end()) {
      blocks.emplace_back(r.graph, r.d);
    }
  }
  for (const auto& [graph, d] : blocks) {
    std::vector<std::string> scenarios;
    std::vector<std::string> learners;
    std::map<std::pair<std::string, std::string>, const SummaryRow*> lookup;
    for (const SummaryRow& r : rows) {
      if (r.graph != graph || r.d != d) continue;
      if (std::find(scenarios.begin(), scenarios.end(), r.scenario) == scenarios.end()) scenarios.push_back(r.scenario);
      if (std::find(learners.begin(), learners.end(), r.learner) == learners.end()) learners.push_back(r.learner);
      lookup[{r.learner, r.scenario}] = &r;
    }
    out << "### " << graph << ", d=" << d << "\n\n| Method |";
    for (const auto& s : scenarios) out << ' ' << s << " SHD | " << s << " SID |";
    out << " failures |\n|---|";
    for (std::size_t s = 0; s < scenarios.size(); ++s) out << "---|---|";
    out << "---|\n";
    for (const auto& l : learners) {
      out << "| " << l << " |";
      int failures = 0;
      for (const auto& s : scenarios) {
        const auto it = lookup.find({l, s});
        if (it == lookup.end()) {
          out << "  |  |";
          continue;
        }
        const SummaryRow& r = *it->second;
        const int ok = r.trials - r.failures;
        failures += r.failures;
        out << ' ' << cell(r.shd_mean, r.shd_std, ok) << " | " << cell(r.sid_mean, r.sid_std, ok) << " |";
      }
      out << ' ' << failures << " |\n";
    }
    out << '\n';
  }
}

void write_summary_json(std::ostream& out, const std::vector<SummaryRow>& rows) {
  json list = json::array();
  for (const SummaryRow& r : rows) {
    const int ok = r.trials - r.failures;
    json row = {{"graph", r.graph},       {"d", r.d},
                {"scenario", r.scenario}, {"learner", r.learner},
                {"trials", r.trials},     {"failures", r.failures},
                {"shd", cell(r.shd_mean, r.shd_std, ok)}, {"sid", cell(r.sid_mean, r.sid_std, ok)}};
    if (ok > 0) {
      row["shd_mean"] = r.shd_mean;
      row["shd_std"] = r.shd_std;
      row["sid_mean"] = r.sid_mean;
      row["sid_std"] = r.sid_std;
      row["runtime_mean"] = r.runtime_mean;
      row["runtime_std"] = r.runtime_std;
    }
    list.push_back(row);
  }
  out << list.dump(2) << '\n';
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "md" || name == "markdown") return ReportFormat::Markdown;
  if (name == "json") return ReportFormat::Json;
  throw ParameterError("unknown format '" + name + "' (expected csv, md or json)");
}

bool write_reports(const BenchConfig& cfg, const std::vector<EvalRecord>& records,
                   const std::vector<ReportFormat>& formats, const json& extra_manifest) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  auto open = [&dir](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("trials.csv");
    write_trials_csv(out, records);
  }
  const std::vector<SummaryRow> rows = summarize(records);
  for (ReportFormat f : formats) {
    if (f == ReportFormat::Csv) {
      auto out = open("summary.csv");
      write_summary_csv(out, rows);
    } else if (f == ReportFormat::Markdown) {
      auto out = open("summary.md");
      write_summary_markdown(out, rows);
    } else {
      auto out = open("summary.json");
      write_summary_json(out, rows);
    }
  }
  json failed_cells = json::array();
  for (const SummaryRow& r : rows) {
    if (r.failures == r.trials) {
      failed_cells.push_back({{"graph", r.graph}, {"d", r.d}, {"scenario", r.scenario}, {"learner", r.learner}});
    }
  }
  json errors = json::array();
  for (const EvalRecord& r : records) {
    if (!r.converged) {
      errors.push_back({{"graph", r.graph}, {"scenario", r.scenario}, {"learner", r.learner}, {"rep", r.rep},
                        {"error", r.error}});
    }
  }
  json manifest = {{"version", version_string()},
                   {"config", bench_config_to_json(cfg)},
                   {"trials", records.size()},
                   {"failed_cells", failed_cells},
                   {"errors", errors}};
  if (!extra_manifest.is_null()) manifest["extra"] = extra_manifest;
  {
    auto out = open("manifest.json");
    out << manifest.dump(2) << '\n';
  }
  return failed_cells.empty();
}

const std::vector<std::string>& sachs_columns() {
  static const std::vector<std::string> names = {"praf", "pmek", "plcg",     "PIP2", "PIP3", "p44/42",
                                                 "pakts473", "PKA", "PKC", "P38",  "pjnk"};
  return names;
}

SachsData load_sachs(const std::string& csv_path, const std::string& edges_path, bool log1p) {
  const NumericTable table = read_numeric_csv(csv_path);
  const auto& canon = sachs_columns();
  if (table.columns.size() != canon.size()) {
    throw FormatError("sachs: expected " + std::to_string(canon.size()) + " columns, found " +
                      std::to_string(table.columns.size()));
  }
  std::vector<int> source(canon.size(), -1);
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    const std::string key = sachs_key(table.columns[c]);
    int target = -1;
    for (std::size_t t = 0; t < canon.size(); ++t) {
      if (sachs_key(canon[t]) == key) target = static_cast<int>(t);
    }
    if (key.empty() || target < 0) throw FormatError("sachs: unrecognized column '" + table.columns[c] + "'");
    if (source[static_cast<std::size_t>(target)] >= 0) {
      throw FormatError("sachs: duplicate column '" + table.columns[c] + "'");
    }
    source[static_cast<std::size_t>(target)] = static_cast<int>(c);
  }
  Eigen::MatrixXd X(table.values.rows(), static_cast<Eigen::Index>(canon.size()));
  for (std::size_t t = 0; t < canon.size(); ++t) X.col(static_cast<Eigen::Index>(t)) = table.values.col(source[t]);
  if (log1p) {
    if ((X.array() <= -1.0).any()) throw DegenerateDataError("sachs: log1p needs values > -1");
    X = X.array().log1p().matrix();
  }
  Dag truth = read_edge_list_file(edges_path);
  if (truth.size() != static_cast<int>(canon.size())) throw FormatError("sachs: consensus graph must have 11 nodes");
  DatasetMeta meta{log1p ? "real(log1p)" : "real", 0, "sachs", truth};
  return {make_dataset(std::move(X), std::move(meta)), std::move(truth)};
}

SachsData load_sachs(const std::string& csv_path, bool log1p) {
  return load_sachs(csv_path, default_asset_dir() + "/sachs/consensus.edges", log1p);
}

std::string default_asset_dir() {
  if (const char* env = std::getenv("DAGBENCH_ASSET_DIR"); env && *env) return env;
  return DAGBENCH_ASSET_DIR;
}

std::string version_string() { return std::string("dagbench ") + DAGBENCH_VERSION; }

}  // namespace dagbench
