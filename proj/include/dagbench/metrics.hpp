#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dagbench/graph.hpp"

namespace dagbench {

/// Column means removed; S = X^T X / n.
Eigen::MatrixXd centered_covariance(const Eigen::MatrixXd& X);

enum class SortCriterion { Var, R2 };
/// Per-node sample variance, or R^2 from regressing each node on all others.
/// A singular covariance falls back to a 1e-6 ridge and sets *ridge_used.
Eigen::VectorXd sort_criterion(const Eigen::MatrixXd& X, SortCriterion criterion, bool* ridge_used = nullptr);

/// Structural Hamming distance; a reversed edge counts once.
int shd(const Dag& est, const Dag& truth);

/// Whether Z is a valid adjustment set for the effect of i on j in g.
bool is_valid_adjustment(const Dag& g, int i, int j, const NodeSet& z);

/// Ordered pairs (i, j) for which adjusting for pa_est(i) misestimates the
/// effect of i on j in truth. When j is an estimated parent of i, the
/// estimate is "no effect", which is wrong iff j descends from i in truth.
int sid(const Dag& est, const Dag& truth);

/// Coefficient of x_i when regressing x_j on {x_i} ∪ Z under covariance sigma.
/// Returns 0 when j ∈ Z. Throws NumericalError on a singular design block.
double adjusted_slope(const Eigen::MatrixXd& sigma, int i, int j, const NodeSet& z);

/// Covariance of the linear Gaussian SEM X = XW + U with Var(U) = diag(noise_var).
Eigen::MatrixXd sem_covariance(const Eigen::MatrixXd& weights, const Eigen::VectorXd& noise_var);

/// SID computed by comparing adjusted regression slopes with true total
/// effects (|difference| > 1e-8 counts as wrong).
int sid_covariance_oracle(const Dag& est, const Dag& truth, const Eigen::MatrixXd& weights,
                          const Eigen::VectorXd& noise_var);

/// Fraction of (s, t, length) triples, over all directed paths s ~> t of each
/// length 1..d, whose criterion values increase; ties count 1/2. Returns 1/2
/// for graphs without edges.
double sortability(const Eigen::VectorXd& values, const Dag& truth);
double sortability(const Eigen::MatrixXd& X, const Dag& truth, SortCriterion criterion);

/// max / min of the noise variances.
double noise_ratio(const Eigen::VectorXd& variances);

struct MetricRecord {
  int shd = 0;
  int sid = 0;
  double runtime_s = 0.0;
  double sortability_var = 0.0;
  double sortability_r2 = 0.0;
  double noise_ratio = 1.0;
};

}  // namespace dagbench
