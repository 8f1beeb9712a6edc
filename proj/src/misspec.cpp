#include "dagbench/misspec.hpp"

#include <algorithm>
#include <cctype>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <tuple>

#include "dagbench/errors.hpp"

namespace dagbench {

namespace {

struct KindName {
  ScenarioKind kind;
  const char* name;
};

constexpr std::array<KindName, 9> kKindNames{{
    {ScenarioKind::Vanilla, "vanilla"},
    {ScenarioKind::Confounded, "confounded"},
    {ScenarioKind::MeasurementError, "measurement-error"},
    {ScenarioKind::Autoregressive, "autoregressive"},
    {ScenarioKind::Heterogeneous, "heterogeneous"},
    {ScenarioKind::Unfaithful, "unfaithful"},
    {ScenarioKind::ScaleVariant, "scale-variant"},
    {ScenarioKind::Missing, "missing"},
    {ScenarioKind::MechanismViolation, "mechanism-violation"},
}};

std::vector<std::string> keys_for(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::MeasurementError:
      return {"delta"};
    case ScenarioKind::Missing:
      return {"beta"};
    case ScenarioKind::Heterogeneous:
      return {"P1", "gamma_het"};
    case ScenarioKind::Confounded:
      return {"rho_conf"};
    case ScenarioKind::Autoregressive:
      return {"a_ar"};
    default:
      return {};
  }
}

bool on_grid(double v, std::initializer_list<double> grid) {
  return std::any_of(grid.begin(), grid.end(), [v](double g) { return std::abs(v - g) < 1e-12; });
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string append_tag(const std::string& base, const std::string& tag) {
  if (base.empty() || base == "vanilla") return tag;
  return base + "+" + tag;
}

// Population mean and variance of each column.
std::pair<Eigen::RowVectorXd, Eigen::RowVectorXd> column_moments(const Eigen::MatrixXd& X) {
  const Eigen::RowVectorXd mean = X.colwise().mean();
  const Eigen::RowVectorXd var = (X.rowwise() - mean).array().square().colwise().mean();
  return {mean, var};
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "?";
}

ScenarioKind parse_scenario_kind(const std::string& name) {
  std::string lowered;
  for (char c : name) {
    if (c == '_' || c == ' ') {
      lowered.push_back('-');
    } else {
      lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  for (const auto& kn : kKindNames) {
    if (lowered == kn.name) return kn.kind;
  }
  // CamelCase aliases ("MeasurementError", "ScaleVariant", ...).
  for (const auto& kn : kKindNames) {
    std::string compact;
    for (const char* p = kn.name; *p; ++p) {
      if (*p != '-') compact.push_back(*p);
    }
    if (lowered == compact) return kn.kind;
  }
  throw ParameterError("unknown scenario '" + name + "'");
}

double default_scenario_param(const std::string& key) {
  if (key == "delta") return 0.8;
  if (key == "beta") return 0.01;
  if (key == "P1") return 0.5;
  if (key == "gamma_het") return 0.1;
  if (key == "rho_conf") return 0.2;
  if (key == "a_ar") return 0.5;
  throw ParameterError("unknown scenario parameter '" + key + "'");
}

double ScenarioSpec::param(const std::string& key) const {
  const auto it = params.find(key);
  return it != params.end() ? it->second : default_scenario_param(key);
}

void ScenarioSpec::validate() const {
  const std::vector<std::string> allowed = keys_for(kind);
  for (const auto& [key, value] : params) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ParameterError("scenario " + to_string(kind) + " has no parameter '" + key + "'");
    }
    if (!std::isfinite(value)) throw ParameterError("scenario parameter '" + key + "' is not finite");
  }
  switch (kind) {
    case ScenarioKind::MeasurementError:
      if (!(param("delta") > 0.0)) throw ParameterError("measurement error: delta must be positive");
      break;
    case ScenarioKind::Missing:
      if (!(param("beta") >= 0.0 && param("beta") < 0.5)) throw ParameterError("missing: beta must lie in [0, 0.5)");
      break;
    case ScenarioKind::Heterogeneous:
      if (!(param("P1") > 0.0 && param("P1") < 1.0)) throw ParameterError("heterogeneous: P1 must lie in (0, 1)");
      if (!(param("gamma_het") > 0.0)) throw ParameterError("heterogeneous: gamma_het must be positive");
      break;
    case ScenarioKind::Confounded:
      if (!(param("rho_conf") > 0.0 && param("rho_conf") <= 1.0)) {
        throw ParameterError("confounded: rho_conf must lie in (0, 1]");
      }
      break;
    case ScenarioKind::Autoregressive:
      if (!(param("a_ar") > 0.0 && param("a_ar") < 1.0)) throw ParameterError("autoregressive: a_ar must lie in (0, 1)");
      break;
    default:
      break;
  }
}

bool ScenarioSpec::canonical() const {
  switch (kind) {
    case ScenarioKind::MeasurementError:
      return on_grid(param("delta"), {0.2, 0.4, 0.6, 0.8});
    case ScenarioKind::Missing:
      return on_grid(param("beta"), {0.005, 0.01, 0.05, 0.1});
    case ScenarioKind::Heterogeneous:
      return on_grid(param("P1"), {0.1, 0.3, 0.5, 0.7, 0.9}) && on_grid(param("gamma_het"), {0.01, 0.05, 0.1, 0.5});
    default:
      return true;
  }
}

std::string ScenarioSpec::tag() const {
  std::string out = to_string(kind);
  const std::vector<std::string> keys = keys_for(kind);
  if (keys.empty()) return out;
  out += "(";
  for (std::size_t t = 0; t < keys.size(); ++t) {
    out += (t ? "," : "") + keys[t] + "=" + format_number(param(keys[t]));
  }
  return out + ")";
}

Eigen::MatrixXd SemSampler::operator()(int n, std::uint64_t seed) const {
  if (n < 1) throw ParameterError("SemSampler: need n >= 1");
  const int d = scm.size();
  Rng rng = make_rng(seed);
  Eigen::MatrixXd U;
  if (noise_model.ar_coefficient) {
    const double a = *noise_model.ar_coefficient;
    const double innovation = std::sqrt(1.0 - a * a);
    std::normal_distribution<double> gauss(0.0, 1.0);
    U.resize(n, d);
    for (int j = 0; j < d; ++j) {
      double u = gauss(rng);
      U(0, j) = u;
      for (int t = 1; t < n; ++t) {
        u = a * u + innovation * gauss(rng);
        U(t, j) = u;
      }
      U.col(j) *= scm.noise.scale(j);
    }
  } else {
    U = sample_noise(scm.noise, n, rng);
  }
  if (noise_model.domains) {
    const auto [p1, gamma] = *noise_model.domains;
    const auto n1 = static_cast<int>(std::lround(p1 * n));
    std::vector<char> second(static_cast<std::size_t>(n), 0);
    std::fill(second.begin() + n1, second.end(), 1);
    std::shuffle(second.begin(), second.end(), rng);
    const double factor = std::sqrt(gamma);
    for (int t = 0; t < n; ++t) {
      if (second[static_cast<std::size_t>(t)]) U.row(t) *= factor;
    }
  }
  if (!noise_model.confounders.empty()) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (const Confounder& c : noise_model.confounders) {
      for (int t = 0; t < n; ++t) {
        const double z = gauss(rng);
        U(t, c.first) += c.weight_first * z;
        U(t, c.second) += c.weight_second * z;
      }
    }
  }
  return propagate(scm, U);
}

Dataset apply_scale_variant(const Dataset& data) {
  const auto [mean, var] = column_moments(data.X);
  for (int j = 0; j < data.d(); ++j) {
    if (!(var(j) > 0.0)) {
      throw DegenerateDataError("scale-variant: column " + std::to_string(j) + " has zero variance");
    }
  }
  const Eigen::RowVectorXd inv_std = var.array().sqrt().inverse();
  Eigen::MatrixXd X = (data.X.rowwise() - mean).array().rowwise() * inv_std.array();
  DatasetMeta meta = data.meta;
  meta.scenario = append_tag(meta.scenario, "scale-variant");
  return make_dataset(std::move(X), std::move(meta));
}

Dataset apply_measurement_error(const Dataset& data, double delta, std::uint64_t seed) {
  if (!(delta > 0.0)) throw ParameterError("measurement error: delta must be positive");
  const int n = data.n();
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd X = data.X;
  for (int j = 0; j < data.d(); ++j) {
    const double mean = X.col(j).mean();
    const double var = n > 1 ? (X.col(j).array() - mean).square().sum() / (n - 1) : 0.0;
    const double sd = std::sqrt(delta * var);
    for (int t = 0; t < n; ++t) X(t, j) += sd * gauss(rng);
  }
  DatasetMeta meta = data.meta;
  meta.scenario = append_tag(meta.scenario, "measurement-error(delta=" + format_number(delta) + ")");
  return make_dataset(std::move(X), std::move(meta));
}

McarDraw apply_mcar(const Sampler& sampler, int d, int n, double beta, std::uint64_t seed) {
  if (n < 1) throw ParameterError("mcar: need n >= 1");
  if (!(beta >= 0.0 && beta < 0.5)) throw ParameterError("mcar: beta must lie in [0, 0.5)");
  const double keep = std::pow(1.0 - beta, d);
  if (keep < 1e-3) throw ParameterError("mcar: expected completion probability below 1e-3");

  McarDraw out;
  out.X.resize(n, d);
  int have = 0;
  std::bernoulli_distribution missing(beta);
  for (std::uint64_t batch = 0; have < n; ++batch) {
    const int want = n - have;
    const int batch_n = batch == 0 ? n : static_cast<int>(std::ceil(want / keep * 1.1)) + 16;
    const std::uint64_t batch_seed = batch == 0 ? seed : derive_seed(seed, {batch});
    const Eigen::MatrixXd X = sampler(batch_n, batch_seed);
    if (X.cols() != d) throw ShapeError("mcar: sampler returned the wrong column count");
    out.rows_drawn += X.rows();
    Rng mask_rng = make_rng(derive_seed(seed, {batch, 0x6d61736bULL}));
    for (Eigen::Index t = 0; t < X.rows() && have < n; ++t) {
      bool complete = true;
      if (beta > 0.0) {
        for (int j = 0; j < d; ++j) complete = !missing(mask_rng) && complete;
      }
      if (complete) out.X.row(have++) = X.row(t);
    }
  }
  return out;
}

Dataset make_heterogeneous(const LinearScm& scm, int n, double p1, double gamma_het, std::uint64_t seed) {
  if (!(p1 > 0.0 && p1 < 1.0)) throw ParameterError("heterogeneous: P1 must lie in (0, 1)");
  const auto n1 = std::lround(p1 * n);
  if (n1 <= 0 || n1 >= n) throw ParameterError("heterogeneous: both domains must receive at least one row");
  if (!(gamma_het > 0.0)) throw ParameterError("heterogeneous: gamma_het must be positive");
  scm.validate();
  SemSampler sampler{scm, NoiseModel{{}, std::make_pair(p1, gamma_het), std::nullopt}};
  ScenarioSpec spec{ScenarioKind::Heterogeneous, {{"P1", p1}, {"gamma_het", gamma_het}}};
  return make_dataset(sampler(n, seed), DatasetMeta{spec.tag(), seed, scm.describe(), scm.dag});
}

std::vector<Triplet> find_triplets(const Dag& g) {
  std::vector<Triplet> out;
  const int d = g.size();
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (!g.has_edge(i, j)) continue;
      for (int k = 0; k < d; ++k) {
        if (g.has_edge(j, k) && g.has_edge(i, k)) out.push_back({i, j, k});
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Triplet& a, const Triplet& b) { return std::tie(a.i, a.j, a.k) < std::tie(b.i, b.j, b.k); });
  return out;
}

LinearScm make_unfaithful(const LinearScm& scm, const UnfaithfulOptions& options) {
  scm.validate();
  const std::vector<Triplet> triplets = find_triplets(scm.dag);
  LinearScm out = scm;
  if (triplets.empty()) return out;

  const int d = scm.size();
  Eigen::MatrixXd& W = out.weights;
  if (options.mediator_weight) {
    for (const Triplet& t : triplets) W(t.j, t.k) = *options.mediator_weight;
  }
  std::vector<std::vector<bool>> cancel(d, std::vector<bool>(d, false));
  for (const Triplet& t : triplets) cancel[t.i][t.k] = true;

  // Targets in topological order, sources in reverse topological order: every
  // path sum used below is already final when it is read.
  const std::vector<int> order = scm.dag.topological_order();
  std::vector<double> reach(d);
  for (int k : order) {
    std::fill(reach.begin(), reach.end(), 0.0);
    reach[k] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int v = *it;
      if (v == k) continue;
      double via_others = 0.0;
      for (int c = 0; c < d; ++c) {
        if (c != k && scm.dag.has_edge(v, c)) via_others += W(v, c) * reach[c];
      }
      if (cancel[v][k]) W(v, k) = -via_others;
      reach[v] = via_others + (scm.dag.has_edge(v, k) ? W(v, k) : 0.0);
    }
  }
  return out;
}

ConfoundedScm make_confounded(const LinearScm& scm, double rho_conf, std::uint64_t seed) {
  if (!(rho_conf > 0.0 && rho_conf <= 1.0)) throw ParameterError("confounded: rho_conf must lie in (0, 1]");
  scm.validate();
  const int d = scm.size();
  const auto pairs = static_cast<long long>(std::llround(rho_conf * d / 2.0));
  const long long capacity = static_cast<long long>(d) * (d - 1) / 2;
  if (pairs > capacity) throw ParameterError("confounded: pair budget exceeds d(d-1)/2");

  Rng rng = make_rng(seed);
  std::vector<Edge> all;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) all.emplace_back(i, j);
  }
  std::uniform_real_distribution<double> magnitude(0.5, 2.0);
  std::bernoulli_distribution negative(0.5);
  auto draw_weight = [&] {
    const double w = magnitude(rng);
    return negative(rng) ? -w : w;
  };
  ConfoundedScm out{scm, {}};
  for (long long t = 0; t < pairs; ++t) {
    std::uniform_int_distribution<long long> pick(t, capacity - 1);
    std::swap(all[t], all[pick(rng)]);
    const double w1 = draw_weight();
    const double w2 = draw_weight();
    out.confounders.push_back({all[t].first, all[t].second, w1, w2});
  }
  return out;
}

Dataset sample_confounded(const ConfoundedScm& cscm, int n, std::uint64_t seed) {
  cscm.scm.validate();
  for (const Confounder& c : cscm.confounders) {
    if (c.first == c.second || c.first < 0 || c.second < 0 || c.first >= cscm.scm.size() ||
        c.second >= cscm.scm.size()) {
      throw ParameterError("confounded: invalid confounded pair");
    }
  }
  SemSampler sampler{cscm.scm, NoiseModel{cscm.confounders, std::nullopt, std::nullopt}};
  return make_dataset(sampler(n, seed), DatasetMeta{"confounded", seed, cscm.scm.describe(), cscm.scm.dag});
}

Dataset make_autoregressive(const LinearScm& scm, int n, double a_ar, std::uint64_t seed) {
  if (!(a_ar > 0.0 && a_ar < 1.0)) throw ParameterError("autoregressive: a_ar must lie in (0, 1)");
  scm.validate();
  SemSampler sampler{scm, NoiseModel{{}, std::nullopt, a_ar}};
  ScenarioSpec spec{ScenarioKind::Autoregressive, {{"a_ar", a_ar}}};
  return make_dataset(sampler(n, seed), DatasetMeta{spec.tag(), seed, scm.describe(), scm.dag});
}

namespace {

constexpr std::array<ScenarioKind, 7> kCanonicalOrder{
    ScenarioKind::Unfaithful,     ScenarioKind::Confounded, ScenarioKind::Heterogeneous,
    ScenarioKind::Autoregressive, ScenarioKind::Missing,    ScenarioKind::MeasurementError,
    ScenarioKind::ScaleVariant};

std::map<ScenarioKind, ScenarioSpec> index_specs(const std::vector<ScenarioSpec>& specs) {
  std::map<ScenarioKind, ScenarioSpec> by_kind;
  for (const ScenarioSpec& spec : specs) {
    spec.validate();
    if (spec.kind == ScenarioKind::MechanismViolation) {
      throw ParameterError("compose: mechanism violation cannot be combined with other transforms");
    }
    if (spec.kind == ScenarioKind::Vanilla) continue;
    if (!by_kind.emplace(spec.kind, spec).second) {
      throw ParameterError("compose: scenario " + to_string(spec.kind) + " listed twice");
    }
  }
  return by_kind;
}

std::string tag_of(const std::map<ScenarioKind, ScenarioSpec>& by_kind) {
  std::string tag;
  for (ScenarioKind kind : kCanonicalOrder) {
    const auto it = by_kind.find(kind);
    if (it != by_kind.end()) tag += (tag.empty() ? "" : "+") + it->second.tag();
  }
  return tag.empty() ? "vanilla" : tag;
}

}  // namespace

std::string composition_tag(const std::vector<ScenarioSpec>& specs) { return tag_of(index_specs(specs)); }

Dataset compose(const std::vector<ScenarioSpec>& specs, const LinearScm& base, int n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("compose: need n >= 1");
  base.validate();
  const std::map<ScenarioKind, ScenarioSpec> by_kind = index_specs(specs);
  const std::string tag = tag_of(by_kind);

  SemSampler sampler{base, {}};
  if (by_kind.count(ScenarioKind::Unfaithful)) sampler.scm = make_unfaithful(base);
  if (const auto it = by_kind.find(ScenarioKind::Confounded); it != by_kind.end()) {
    sampler.noise_model.confounders =
        make_confounded(sampler.scm, it->second.param("rho_conf"), derive_seed(seed, {2})).confounders;
  }
  if (const auto it = by_kind.find(ScenarioKind::Heterogeneous); it != by_kind.end()) {
    const double p1 = it->second.param("P1");
    const auto n1 = std::lround(p1 * n);
    if (n1 <= 0 || n1 >= n) throw ParameterError("compose: heterogeneous domains need at least one row each");
    sampler.noise_model.domains = std::make_pair(p1, it->second.param("gamma_het"));
  }
  if (const auto it = by_kind.find(ScenarioKind::Autoregressive); it != by_kind.end()) {
    sampler.noise_model.ar_coefficient = it->second.param("a_ar");
  }

  Eigen::MatrixXd X;
  if (const auto it = by_kind.find(ScenarioKind::Missing); it != by_kind.end()) {
    X = apply_mcar(sampler, base.size(), n, it->second.param("beta"), seed).X;
  } else {
    X = sampler(n, seed);
  }
  Dataset data = make_dataset(std::move(X), DatasetMeta{"vanilla", seed, sampler.scm.describe(), base.dag});
  if (const auto it = by_kind.find(ScenarioKind::MeasurementError); it != by_kind.end()) {
    data = apply_measurement_error(data, it->second.param("delta"), derive_seed(seed, {3}));
  }
  if (by_kind.count(ScenarioKind::ScaleVariant)) data = apply_scale_variant(data);
  data.meta.scenario = tag;
  return data;
}

}  // namespace dagbench
