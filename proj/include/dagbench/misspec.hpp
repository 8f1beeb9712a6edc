#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dagbench/scm.hpp"

namespace dagbench {

enum class ScenarioKind {
  Vanilla,
  Confounded,
  MeasurementError,
  Autoregressive,
  Heterogeneous,
  Unfaithful,
  ScaleVariant,
  Missing,
  MechanismViolation,
};

std::string to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(const std::string& name);

/// One assumption-violation scenario and its parameters.
///
/// Parameter keys: "delta" (measurement-noise fraction), "beta" (missingness
/// probability), "P1" and "gamma_het" (first-domain proportion and
/// second-domain noise variance), "rho_conf" (confounded pair fraction),
/// "a_ar" (autoregressive coefficient). Missing keys take the defaults below.
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::Vanilla;
  std::map<std::string, double> params;

  double param(const std::string& key) const;
  /// Range checks; throws ParameterError.
  void validate() const;
  /// Parameters on the published grids.
  bool canonical() const;
  /// Stable short label, e.g. "heterogeneous(P1=0.5,gamma_het=0.1)".
  std::string tag() const;
};

double default_scenario_param(const std::string& key);

/// (n, seed) -> n x d sample matrix.
using Sampler = std::function<Eigen::MatrixXd(int n, std::uint64_t seed)>;

/// Latent standard-Gaussian variable feeding two observed nodes.
struct Confounder {
  int first = 0;
  int second = 0;
  double weight_first = 1.0;
  double weight_second = 1.0;
};

/// Linear SEM with optional noise modifications. Covers the SCM-level
/// scenarios and any combination of them.
struct NoiseModel {
  std::vector<Confounder> confounders;
  /// Heterogeneous two-domain noise: (P1, gamma_het).
  std::optional<std::pair<double, double>> domains;
  /// AR(1) coefficient across the sample index.
  std::optional<double> ar_coefficient;
};

struct SemSampler {
  LinearScm scm;
  NoiseModel noise_model;

  Eigen::MatrixXd operator()(int n, std::uint64_t seed) const;
};

Dataset apply_scale_variant(const Dataset& data);
Dataset apply_measurement_error(const Dataset& data, double delta, std::uint64_t seed);

struct McarDraw {
  Eigen::MatrixXd X;
  long long rows_drawn = 0;
};
/// Draws batches from the sampler, masks entries with probability beta, and
/// keeps complete rows until exactly n are collected.
McarDraw apply_mcar(const Sampler& sampler, int d, int n, double beta, std::uint64_t seed);

Dataset make_heterogeneous(const LinearScm& scm, int n, double p1, double gamma_het, std::uint64_t seed);

struct UnfaithfulOptions {
  /// Weight given to the mediator edge j -> k of each cancelled triplet before
  /// the direct weight is re-derived. -1 reproduces X_k = f(X_i) - X_j + U_k;
  /// std::nullopt keeps the sampled mediator weight.
  std::optional<double> mediator_weight = -1.0;
};

/// A cancelled triplet i -> j -> k with i -> k.
struct Triplet {
  int i = 0;
  int j = 0;
  int k = 0;
};

/// Triplets i -> j -> k with i -> k, in lexicographic order.
std::vector<Triplet> find_triplets(const Dag& g);

/// Reassign direct weights so that the total effect of i on k vanishes for
/// every triplet.
LinearScm make_unfaithful(const LinearScm& scm, const UnfaithfulOptions& options = {});

struct ConfoundedScm {
  LinearScm scm;
  std::vector<Confounder> confounders;
};
/// round(rho_conf * d / 2) distinct node pairs, each sharing a fresh latent.
ConfoundedScm make_confounded(const LinearScm& scm, double rho_conf, std::uint64_t seed);
Dataset sample_confounded(const ConfoundedScm& cscm, int n, std::uint64_t seed);

Dataset make_autoregressive(const LinearScm& scm, int n, double a_ar, std::uint64_t seed);

/// Labels of the non-vanilla entries joined by "+" in canonical order, or
/// "vanilla".
std::string composition_tag(const std::vector<ScenarioSpec>& specs);

/// Apply several scenarios in canonical order: unfaithful, confounded,
/// heterogeneous, autoregressive, missing, measurement error, scale-variant.
Dataset compose(const std::vector<ScenarioSpec>& specs, const LinearScm& base, int n, std::uint64_t seed);

}  // namespace dagbench
