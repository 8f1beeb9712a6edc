#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dagbench/acyclicity.hpp"
#include "dagbench/graph.hpp"
#include "dagbench/metrics.hpp"
#include "dagbench/scm.hpp"
#include "dagbench/solvers.hpp"

namespace dagbench {

enum class SortRegression { Lasso, AdaptiveLassoBic };

enum class Method { Notears, GolemEV, GolemNV, NoCurl, Dagma, VarSortnRegress, R2SortnRegress, Random };

std::string to_string(Method method);
std::string to_string(SortRegression regression);
SortRegression parse_sort_regression(const std::string& name);
Method parse_method(const std::string& name);
/// Methods whose lambda1 is swept over the grid in oracle mode.
bool uses_lambda_grid(Method method);

/// The published sparsity grid.
const std::vector<double>& lambda1_grid();

struct LearnerConfig {
  Method method = Method::Dagma;
  double lambda1 = 0.05;
  /// GOLEM acyclicity-penalty weight.
  double lambda2 = 5.0;
  double tau = 0.3;
  /// Constraint for Notears and for NoCurl's initialization.
  AcyclicityKind constraint = AcyclicityKind::expm_kind();
  AlmConfig alm = default_alm();
  CentralPathConfig central;
  /// Inner solver for GOLEM, NoCurl and the SortnRegress regressions.
  InnerConfig inner = default_inner();
  SortRegression sort_regression = SortRegression::Lasso;
  /// Expected degree of the Random baseline.
  double random_degree = 2.0;
  /// Optional per-round solver trace.
  TraceSink trace;

  static AlmConfig default_alm();
  static InnerConfig default_inner();
  void validate() const;
};

struct LearnedGraph {
  Eigen::MatrixXd W_raw;
  Dag dag;
  Method method = Method::Random;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double tau = 0.0;
  double runtime_s = 0.0;
  bool converged = true;
  std::vector<std::string> warnings;

  /// JSON record: method, hyperparameters, runtime, weighted edge list.
  std::string to_json() const;
};

/// Drops |w| < tau, then removes the smallest-|w| edge lying on a cycle until
/// the support is acyclic (ties: lowest (i, j)).
Dag threshold(const Eigen::MatrixXd& W, double tau);

/// 1/(2n) |X - XW|_F^2 from the sufficient statistic S of centered data.
SmoothFn least_squares_score(const Eigen::MatrixXd& S);
/// GOLEM likelihood (equal or non-equal variances) plus lambda2 * h_expm.
SmoothFn golem_score(const Eigen::MatrixXd& S, int n, double lambda2, bool equal_variance);

LearnedGraph notears_linear(const Dataset& data, double lambda1, const AcyclicityKind& constraint,
                            const AlmConfig& cfg, double tau = 0.3, const TraceSink& trace = {});
LearnedGraph golem(const Dataset& data, double lambda1, double lambda2, bool equal_variance,
                   const InnerConfig& cfg, double tau = 0.3);
/// A = W ∘ ReLU(grad p) with grad(p)(i, j) = p_j - p_i.
Eigen::MatrixXd nocurl_map(const Eigen::MatrixXd& W, const Eigen::VectorXd& p);
LearnedGraph nocurl(const Dataset& data, double lambda1, const LearnerConfig& cfg);
LearnedGraph dagma_linear(const Dataset& data, double lambda1, const CentralPathConfig& cfg, double tau = 0.3,
                          const TraceSink& trace = {});

/// Ascending criterion order, ties broken by node index.
std::vector<int> criterion_order(const Eigen::VectorXd& values);
/// Regresses each node on its predecessors in criterion order; nonzero
/// coefficients become edges. Lasso uses lambda1; AdaptiveLassoBic ignores it
/// and picks the penalty by BIC along an adaptive-lasso path.
LearnedGraph sortnregress(const Dataset& data, SortCriterion criterion, double lambda1, const InnerConfig& cfg,
                          SortRegression regression = SortRegression::Lasso);

LearnedGraph random_baseline(int d, double k, std::uint64_t seed);

/// Dispatch on cfg.method and record wall-clock time. The seed is used only by
/// the Random baseline.
LearnedGraph run_learner(const Dataset& data, const LearnerConfig& cfg, std::uint64_t seed = 0);

}  // namespace dagbench
