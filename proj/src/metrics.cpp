#include "dagbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dagbench/errors.hpp"

namespace dagbench {

namespace {

void same_size(const Dag& a, const Dag& b) {
  if (a.size() != b.size()) throw ShapeError("graphs have different node counts");
}

bool contains(const NodeSet& set, int v) { return std::binary_search(set.begin(), set.end(), v); }

// Separation of i and j given z in the DAG with adjacency adj, via the
// moralized graph of the ancestral set of {i, j} ∪ z.
bool moral_separated(const BoolMatrix& adj, int i, int j, const NodeSet& z) {
  const int d = static_cast<int>(adj.rows());
  std::vector<char> keep(static_cast<std::size_t>(d), 0);
  std::vector<int> stack = {i, j};
  stack.insert(stack.end(), z.begin(), z.end());
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (keep[static_cast<std::size_t>(v)]) continue;
    keep[static_cast<std::size_t>(v)] = 1;
    for (int p = 0; p < d; ++p) {
      if (adj(p, v) && !keep[static_cast<std::size_t>(p)]) stack.push_back(p);
    }
  }
  BoolMatrix moral = BoolMatrix::Constant(d, d, false);
  for (int v = 0; v < d; ++v) {
    if (!keep[static_cast<std::size_t>(v)]) continue;
    std::vector<int> parents;
    for (int p = 0; p < d; ++p) {
      if (adj(p, v)) parents.push_back(p);
    }
    for (int p : parents) {
      moral(p, v) = moral(v, p) = true;
      for (int q : parents) {
        if (p != q) moral(p, q) = true;
      }
    }
  }
  std::vector<char> seen(static_cast<std::size_t>(d), 0);
  for (int v : z) seen[static_cast<std::size_t>(v)] = 1;
  stack = {i};
  seen[static_cast<std::size_t>(i)] = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (v == j) return false;
    for (int u = 0; u < d; ++u) {
      if (moral(v, u) && keep[static_cast<std::size_t>(u)] && !seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = 1;
        stack.push_back(u);
      }
    }
  }
  return true;
}

}  // namespace

Eigen::MatrixXd centered_covariance(const Eigen::MatrixXd& X) {
  if (X.rows() < 1) throw DegenerateDataError("empty data matrix");
  const Eigen::MatrixXd C = X.rowwise() - X.colwise().mean();
  return (C.transpose() * C) / static_cast<double>(X.rows());
}

Eigen::VectorXd sort_criterion(const Eigen::MatrixXd& X, SortCriterion criterion, bool* ridge_used) {
  const Eigen::MatrixXd S = centered_covariance(X);
  if (ridge_used) *ridge_used = false;
  if (criterion == SortCriterion::Var) return S.diagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  Eigen::MatrixXd P;
  if (llt.info() == Eigen::Success) P = llt.solve(Eigen::MatrixXd::Identity(S.rows(), S.cols()));
  if (llt.info() != Eigen::Success || !P.allFinite() || (P.diagonal().array() <= 0.0).any()) {
    const Eigen::MatrixXd ridged = S + 1e-6 * Eigen::MatrixXd::Identity(S.rows(), S.cols());
    P = ridged.llt().solve(Eigen::MatrixXd::Identity(S.rows(), S.cols()));
    if (ridge_used) *ridge_used = true;
  }
  Eigen::VectorXd r2(S.rows());
  for (Eigen::Index j = 0; j < S.rows(); ++j) {
    if (!(S(j, j) > 0.0)) throw DegenerateDataError("R^2 undefined for a constant column");
    r2(j) = 1.0 - 1.0 / (S(j, j) * P(j, j));
  }
  return r2;
}

int shd(const Dag& est, const Dag& truth) {
  same_size(est, truth);
  int count = 0;
  for (int i = 0; i < truth.size(); ++i) {
    for (int j = i + 1; j < truth.size(); ++j) {
      const bool e_ij = est.has_edge(i, j);
      const bool e_ji = est.has_edge(j, i);
      const bool t_ij = truth.has_edge(i, j);
      const bool t_ji = truth.has_edge(j, i);
      if ((e_ij || e_ji) != (t_ij || t_ji)) {
        ++count;
      } else if (e_ij != t_ij) {
        ++count;
      }
    }
  }
  return count;
}

bool is_valid_adjustment(const Dag& g, int i, int j, const NodeSet& z) {
  if (i == j) throw ParameterError("adjustment: i and j must differ");
  if (contains(z, i) || contains(z, j)) throw ParameterError("adjustment: Z must exclude i and j");
  const int d = g.size();
  const NodeSet de_i = descendants(g, i);
  const NodeSet an_j = ancestors(g, j);
  // Nodes other than i on causal paths i ~> j: descendants of i that are j or
  // ancestors of j.
  std::vector<char> on_path(static_cast<std::size_t>(d), 0);
  for (int v : de_i) {
    if (v != i && (v == j || contains(an_j, v))) on_path[static_cast<std::size_t>(v)] = 1;
  }
  for (int v = 0; v < d; ++v) {
    if (!on_path[static_cast<std::size_t>(v)]) continue;
    if (contains(z, v)) return false;
    for (int w : descendants(g, v)) {
      if (contains(z, w)) return false;
    }
  }
  BoolMatrix backdoor = g.adjacency();
  for (int c = 0; c < d; ++c) {
    if (on_path[static_cast<std::size_t>(c)]) backdoor(i, c) = false;
  }
  return moral_separated(backdoor, i, j, z);
}

int sid(const Dag& est, const Dag& truth) {
  same_size(est, truth);
  int count = 0;
  for (int i = 0; i < truth.size(); ++i) {
    const NodeSet z = est.parents(i);
    const NodeSet de_i = descendants(truth, i);
    for (int j = 0; j < truth.size(); ++j) {
      if (j == i) continue;
      if (contains(z, j)) {
        if (contains(de_i, j)) ++count;
      } else if (!is_valid_adjustment(truth, i, j, z)) {
        ++count;
      }
    }
  }
  return count;
}

double adjusted_slope(const Eigen::MatrixXd& sigma, int i, int j, const NodeSet& z) {
  if (contains(z, j)) return 0.0;
  std::vector<int> set = {i};
  set.insert(set.end(), z.begin(), z.end());
  const auto m = static_cast<Eigen::Index>(set.size());
  Eigen::MatrixXd A(m, m);
  Eigen::VectorXd b(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    b(a) = sigma(set[static_cast<std::size_t>(a)], j);
    for (Eigen::Index c = 0; c < m; ++c) A(a, c) = sigma(set[static_cast<std::size_t>(a)], set[static_cast<std::size_t>(c)]);
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw NumericalError("adjusted_slope: singular design block");
  return llt.solve(b)(0);
}

Eigen::MatrixXd sem_covariance(const Eigen::MatrixXd& weights, const Eigen::VectorXd& noise_var) {
  const Eigen::Index d = weights.rows();
  if (weights.cols() != d || noise_var.size() != d) throw ShapeError("sem_covariance: shape mismatch");
  Eigen::MatrixXd IW = -weights;
  IW.diagonal().array() += 1.0;
  const Eigen::MatrixXd inv = IW.partialPivLu().inverse();
  return inv.transpose() * noise_var.asDiagonal() * inv;
}

int sid_covariance_oracle(const Dag& est, const Dag& truth, const Eigen::MatrixXd& weights,
                          const Eigen::VectorXd& noise_var) {
  same_size(est, truth);
  const Eigen::MatrixXd sigma = sem_covariance(weights, noise_var);
  const Eigen::MatrixXd effects = total_effect_matrix(weights);
  int count = 0;
  for (int i = 0; i < truth.size(); ++i) {
    const NodeSet z = est.parents(i);
    for (int j = 0; j < truth.size(); ++j) {
      if (j == i) continue;
      if (std::abs(adjusted_slope(sigma, i, j, z) - effects(i, j)) > 1e-8) ++count;
    }
  }
  return count;
}

double sortability(const Eigen::VectorXd& values, const Dag& truth) {
  const int d = truth.size();
  if (values.size() != d) throw ShapeError("sortability: one value per node required");
  const BoolMatrix adj = truth.adjacency();
  BoolMatrix power = adj;
  double numerator = 0.0;
  long long denominator = 0;
  for (int length = 1; length <= d; ++length) {
    for (int s = 0; s < d; ++s) {
      for (int t = 0; t < d; ++t) {
        if (!power(s, t)) continue;
        ++denominator;
        if (values(s) < values(t)) {
          numerator += 1.0;
        } else if (values(s) == values(t)) {
          numerator += 0.5;
        }
      }
    }
    BoolMatrix next = BoolMatrix::Constant(d, d, false);
    for (int s = 0; s < d; ++s) {
      for (int m = 0; m < d; ++m) {
        if (!power(s, m)) continue;
        for (int t = 0; t < d; ++t) next(s, t) = next(s, t) || adj(m, t);
      }
    }
    if (!next.any()) break;
    power = std::move(next);
  }
  return denominator == 0 ? 0.5 : numerator / static_cast<double>(denominator);
}

double sortability(const Eigen::MatrixXd& X, const Dag& truth, SortCriterion criterion) {
  if (X.cols() != truth.size()) throw ShapeError("sortability: data and graph sizes differ");
  return sortability(sort_criterion(X, criterion), truth);
}

double noise_ratio(const Eigen::VectorXd& variances) {
  if (variances.size() == 0) throw ParameterError("noise_ratio: empty variance vector");
  if (!(variances.minCoeff() > 0.0)) throw ParameterError("noise_ratio: variances must be positive");
  return variances.maxCoeff() / variances.minCoeff();
}

}  // namespace dagbench
