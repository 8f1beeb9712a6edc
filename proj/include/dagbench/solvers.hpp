#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dagbench/acyclicity.hpp"

namespace dagbench {

double soft_threshold(double x, double t);

/// Smooth objective: returns f(W) and writes the gradient when grad is not
/// null. May throw DomainError for W outside its domain.
using SmoothFn = std::function<double(const Eigen::MatrixXd& W, Eigen::MatrixXd* grad)>;

enum class StepRule { Fixed, Backtracking };

struct InnerConfig {
  StepRule step_rule = StepRule::Backtracking;
  /// Initial step (the step itself under StepRule::Fixed).
  double step = 1.0;
  int max_iters = 10000;
  /// Stop when the max-abs entry of the gradient mapping falls below tol.
  double tol = 1e-6;
  double lambda1 = 0.0;
  /// Pin the diagonal of every iterate to 0.
  bool zero_diagonal = true;
  int max_halvings = 50;

  void validate() const;
};

struct ProxResult {
  Eigen::MatrixXd W;
  /// Composite objective f(W) + lambda1 * sum |W|.
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Proximal gradient (ISTA) for f(W) + lambda1 * sum_ij c_ij |W_ij|, with
/// c = l1_weights when given and 1 otherwise. Under backtracking, each
/// iteration first doubles the step and then halves it until the standard
/// sufficient-decrease bound holds; the composite objective never increases
/// between accepted iterates. Exhausted halvings or a non-finite objective
/// throw NumericalError carrying the last accepted iterate.
ProxResult prox_grad_minimize(const SmoothFn& f, const Eigen::MatrixXd& init, const InnerConfig& cfg,
                              const Eigen::MatrixXd* l1_weights = nullptr);

struct TraceRecord {
  int iteration = 0;
  double objective = 0.0;
  double h = 0.0;
  double alpha = 0.0;
  double mu = 0.0;
};
using TraceSink = std::function<void(const TraceRecord&)>;

struct AlmConfig {
  double eta = 10.0;
  double gamma = 0.25;
  double eps_h = 1e-8;
  int max_outer = 100;
  double alpha0 = 0.0;
  double mu0 = 1.0;
  InnerConfig inner;

  void validate() const;
  /// eps_h is one of 1e-6, 1e-8, 1e-10.
  bool canonical() const;
};

struct AlmResult {
  Eigen::MatrixXd W;
  double h = 0.0;
  bool converged = false;
  int outer_iterations = 0;
  double alpha = 0.0;
  double mu = 0.0;
  std::vector<double> h_trace;
};

/// Augmented Lagrangian loop for min F(W) + lambda1 |W|_1 s.t. c(W) = 0.
/// Each round minimizes F + alpha c + (mu/2) c^2 from the previous iterate,
/// then alpha += mu c and mu *= eta when |c| did not shrink by gamma. Stops
/// once |c| < eps_h (converged) or after max_outer rounds. Throws
/// NonConvergenceError when |c| fails to decrease for 5 consecutive rounds
/// at mu >= 1e16.
AlmResult alm_solve(const SmoothFn& score, const SmoothFn& constraint, const AlmConfig& cfg,
                    const Eigen::MatrixXd& init, const TraceSink& trace = {});
AlmResult alm_solve(const SmoothFn& score, const AcyclicityKind& constraint, const AlmConfig& cfg,
                    const Eigen::MatrixXd& init, const TraceSink& trace = {});

struct CentralPathConfig {
  std::vector<double> s = {1.0, 0.9, 0.8};
  std::vector<double> mu = {1.0, 0.1, 0.01, 0.001};
  InnerConfig inner = default_inner();
  /// Added to s when a warm start lies outside the next stage's domain.
  double s_bump = 0.1;

  static InnerConfig default_inner();
  void validate() const;
};

struct CentralPathResult {
  Eigen::MatrixXd W;
  /// h_ldet at the final iterate and final s.
  double h = 0.0;
  /// s actually used by each stage, after any bumps.
  std::vector<double> s_used;
  int iterations = 0;
};

/// Stage t minimizes mu_t (F + lambda1 |W|_1) + h_ldet(W, s_t), warm-started
/// from stage t-1. The s list is padded with its last value to the length of
/// the mu list.
CentralPathResult central_path_solve(const SmoothFn& score, const CentralPathConfig& cfg,
                                     const Eigen::MatrixXd& init, const TraceSink& trace = {});

}  // namespace dagbench
