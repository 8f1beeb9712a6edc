#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the library code they check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "dagbench/graph.hpp"

namespace dagbench::testing {

/// Bitmask over the off-diagonal entries of a d x d matrix, row-major.
inline BoolMatrix adjacency_from_mask(int d, std::uint32_t mask) {
  BoolMatrix adj = BoolMatrix::Constant(d, d, false);
  int bit = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      adj(i, j) = ((mask >> bit) & 1U) != 0;
      ++bit;
    }
  }
  return adj;
}

/// Acyclicity by repeated removal of sources, on bitmask rows.
inline bool acyclic_by_peeling(const BoolMatrix& adj) {
  const auto d = static_cast<int>(adj.rows());
  std::vector<bool> removed(static_cast<std::size_t>(d), false);
  for (int round = 0; round < d; ++round) {
    int source = -1;
    for (int j = 0; j < d && source < 0; ++j) {
      if (removed[static_cast<std::size_t>(j)]) continue;
      bool has_parent = false;
      for (int i = 0; i < d; ++i) has_parent = has_parent || (!removed[static_cast<std::size_t>(i)] && adj(i, j));
      if (!has_parent) source = j;
    }
    if (source < 0) return false;
    removed[static_cast<std::size_t>(source)] = true;
  }
  return true;
}

/// Every labeled DAG on d nodes (1, 1, 3, 25, 543, 29281 for d = 0..5).
inline std::vector<Dag> all_dags(int d) {
  std::vector<Dag> out;
  const int bits = d * (d - 1);
  for (std::uint32_t mask = 0; mask < (1U << bits); ++mask) {
    BoolMatrix adj = adjacency_from_mask(d, mask);
    if (acyclic_by_peeling(adj)) out.emplace_back(std::move(adj));
  }
  return out;
}

/// Uniformly random DAG: random order, each forward pair present with prob p.
inline Dag random_dag(int d, double p, std::mt19937_64& rng) {
  std::vector<int> order(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution coin(p);
  BoolMatrix adj = BoolMatrix::Constant(d, d, false);
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) {
      if (coin(rng)) adj(order[static_cast<std::size_t>(a)], order[static_cast<std::size_t>(b)]) = true;
    }
  }
  return Dag(adj);
}

/// Generic edge weights: magnitude U(0.5, 2), random sign, on the support of g.
inline Eigen::MatrixXd random_weights(const Dag& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  std::bernoulli_distribution sign(0.5);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(g.size(), g.size());
  for (const auto& [i, j] : g.edges()) W(i, j) = sign(rng) ? mag(rng) : -mag(rng);
  return W;
}

/// Descendants by DFS over the adjacency matrix, including i itself.
inline std::vector<bool> reach_from(const BoolMatrix& adj, int i) {
  const auto d = static_cast<int>(adj.rows());
  std::vector<bool> seen(static_cast<std::size_t>(d), false);
  std::vector<int> stack{i};
  seen[static_cast<std::size_t>(i)] = true;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < d; ++v) {
      if (adj(u, v) && !seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

/// d-separation by enumerating every simple path in the skeleton and applying
/// the blocking rules node by node.
inline bool d_separated_brute_force(const Dag& g, int x, int y, const std::vector<int>& z) {
  const BoolMatrix& adj = g.adjacency();
  const int d = g.size();
  std::vector<bool> in_z(static_cast<std::size_t>(d), false);
  for (int v : z) in_z[static_cast<std::size_t>(v)] = true;
  // collider_open[v]: v or one of its descendants is in Z.
  std::vector<bool> collider_open(static_cast<std::size_t>(d), false);
  for (int v = 0; v < d; ++v) {
    const auto reach = reach_from(adj, v);
    for (int u = 0; u < d; ++u) collider_open[static_cast<std::size_t>(v)] = collider_open[static_cast<std::size_t>(v)] || (reach[static_cast<std::size_t>(u)] && in_z[static_cast<std::size_t>(u)]);
  }
  std::vector<int> path{x};
  std::vector<bool> on_path(static_cast<std::size_t>(d), false);
  on_path[static_cast<std::size_t>(x)] = true;
  auto path_open = [&]() {
    for (std::size_t k = 1; k + 1 < path.size(); ++k) {
      const int a = path[k - 1];
      const int v = path[k];
      const int b = path[k + 1];
      const bool collider = adj(a, v) && adj(b, v);
      if (collider ? !collider_open[static_cast<std::size_t>(v)] : in_z[static_cast<std::size_t>(v)]) return false;
    }
    return true;
  };
  std::function<bool(int)> search = [&](int u) {
    if (u == y) return path_open();
    for (int v = 0; v < d; ++v) {
      if (on_path[static_cast<std::size_t>(v)] || !(adj(u, v) || adj(v, u))) continue;
      on_path[static_cast<std::size_t>(v)] = true;
      path.push_back(v);
      const bool open = search(v);
      path.pop_back();
      on_path[static_cast<std::size_t>(v)] = false;
      if (open) return true;
    }
    return false;
  };
  return !search(x);
}

/// Cyclic coordinate descent for (1/2n)|y - Xb|^2 + lambda |b|_1.
inline Eigen::VectorXd lasso_coordinate_descent(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                                                int sweeps = 100000, double tol = 1e-14) {
  const auto n = static_cast<double>(X.rows());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(X.cols());
  Eigen::VectorXd r = y;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double delta = 0.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double norm = X.col(j).squaredNorm() / n;
      const double rho = X.col(j).dot(r) / n + norm * b(j);
      const double next = std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho) / norm;
      r -= X.col(j) * (next - b(j));
      delta = std::max(delta, std::abs(next - b(j)));
      b(j) = next;
    }
    if (delta < tol) break;
  }
  return b;
}

/// Truncated power series of exp(M).
inline Eigen::MatrixXd expm_series(const Eigen::MatrixXd& M, int terms = 60) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(M.rows(), M.cols());
  Eigen::MatrixXd term = sum;
  for (int k = 1; k < terms; ++k) {
    term = term * M / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

/// Central finite-difference gradient of a scalar function of a matrix.
inline Eigen::MatrixXd finite_difference(const std::function<double(const Eigen::MatrixXd&)>& f,
                                         const Eigen::MatrixXd& W, double step) {
  Eigen::MatrixXd grad(W.rows(), W.cols());
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      Eigen::MatrixXd plus = W;
      Eigen::MatrixXd minus = W;
      plus(i, j) += step;
      minus(i, j) -= step;
      grad(i, j) = (f(plus) - f(minus)) / (2.0 * step);
    }
  }
  return grad;
}

/// Two-sample Kolmogorov-Smirnov test; asymptotic p-value.
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::size_t ia = 0;
  std::size_t ib = 0;
  double stat = 0.0;
  while (ia < a.size() && ib < b.size()) {
    const double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] <= x) ++ia;
    while (ib < b.size() && b[ib] <= x) ++ib;
    stat = std::max(stat, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * stat;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return std::clamp(p, 0.0, 1.0);
}

/// Residual variance of column k after least squares on `regressors` (with
/// intercept).
inline double residual_variance(const Eigen::MatrixXd& X, int k, const std::vector<int>& regressors) {
  const auto n = X.rows();
  Eigen::MatrixXd A(n, static_cast<Eigen::Index>(regressors.size()) + 1);
  A.col(0).setOnes();
  for (std::size_t c = 0; c < regressors.size(); ++c) A.col(static_cast<Eigen::Index>(c) + 1) = X.col(regressors[c]);
  const Eigen::VectorXd beta = A.colPivHouseholderQr().solve(X.col(k));
  const Eigen::VectorXd r = X.col(k) - A * beta;
  return r.squaredNorm() / static_cast<double>(n - A.cols());
}

/// Var(x_k | x_S) from a covariance matrix.
inline double conditional_variance(const Eigen::MatrixXd& sigma, int k, const std::vector<int>& s) {
  if (s.empty()) return sigma(k, k);
  const auto m = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd ss(m, m);
  Eigen::VectorXd sk(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    sk(a) = sigma(s[static_cast<std::size_t>(a)], k);
    for (Eigen::Index b = 0; b < m; ++b) ss(a, b) = sigma(s[static_cast<std::size_t>(a)], s[static_cast<std::size_t>(b)]);
  }
  return sigma(k, k) - sk.dot(ss.ldlt().solve(sk));
}

/// Regressors that isolate the noise term U_k - U_j of a cancelled triplet
/// i -> j -> k: the other parents of k and the parents of j. Empty optional
/// when another parent of k descends from j, since U_j then leaks into the
/// regressors.
inline std::optional<std::vector<int>> triplet_regressors(const Dag& g, int j, int k) {
  const auto below_j = reach_from(g.adjacency(), j);
  std::vector<int> out;
  for (int p : g.parents(k)) {
    if (p == j) continue;
    if (below_j[static_cast<std::size_t>(p)]) return std::nullopt;
    out.push_back(p);
  }
  for (int q : g.parents(j)) {
    if (std::find(out.begin(), out.end(), q) == out.end()) out.push_back(q);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace dagbench::testing
