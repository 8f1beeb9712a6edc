#include "dagbench/learners.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "dagbench/errors.hpp"

namespace dagbench {

namespace {

struct MethodName {
  Method method;
  const char* name;
};

constexpr std::array<MethodName, 8> kMethodNames{{
    {Method::Notears, "NOTEARS"},
    {Method::GolemEV, "GOLEM-EV"},
    {Method::GolemNV, "GOLEM-NV"},
    {Method::NoCurl, "NoCurl"},
    {Method::Dagma, "DAGMA"},
    {Method::VarSortnRegress, "Var-SortnRegress"},
    {Method::R2SortnRegress, "R2-SortnRegress"},
    {Method::Random, "Random"},
}};

std::string fold(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

void check_tau(double tau) {
  if (!(tau > 0.0)) throw ParameterError("threshold: tau must be positive");
}

void check_lambda(double lambda1) {
  if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) throw ParameterError("lambda1 must be finite and >= 0");
}

void warn_small_n(const Dataset& data, LearnedGraph& out) {
  if (data.n() <= data.d()) out.warnings.push_back("n <= d: the score is underdetermined");
}

LearnedGraph finish(Eigen::MatrixXd W, Method method, double lambda1, double lambda2, double tau, bool converged) {
  LearnedGraph out;
  out.dag = threshold(W, tau);
  out.W_raw = std::move(W);
  out.method = method;
  out.lambda1 = lambda1;
  out.lambda2 = lambda2;
  out.tau = tau;
  out.converged = converged;
  return out;
}

// Boolean transitive closure: reach(i, j) iff a directed path i -> ... -> j exists.
BoolMatrix transitive_closure(const BoolMatrix& adj) {
  BoolMatrix reach = adj;
  const Eigen::Index d = adj.rows();
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!reach(i, k)) continue;
      for (Eigen::Index j = 0; j < d; ++j) reach(i, j) = reach(i, j) || reach(k, j);
    }
  }
  return reach;
}

// argmin 1/2 b'Gb - c'b + lambda |b|_1, the Gram form of 1/(2n)|y - Xb|^2.
Eigen::VectorXd lasso_gram(const Eigen::MatrixXd& G, const Eigen::VectorXd& c, double lambda, InnerConfig inner,
                           const Eigen::VectorXd* warm = nullptr) {
  inner.lambda1 = lambda;
  const SmoothFn loss = [&G, &c](const Eigen::MatrixXd& beta, Eigen::MatrixXd* grad) {
    const Eigen::VectorXd Gb = G * beta.col(0);
    if (grad) *grad = Gb - c;
    return 0.5 * beta.col(0).dot(Gb) - c.dot(beta.col(0));
  };
  const Eigen::MatrixXd init = warm ? Eigen::MatrixXd(*warm) : Eigen::MatrixXd::Zero(c.size(), 1);
  return prox_grad_minimize(loss, init, inner).W.col(0);
}

// Adaptive lasso: OLS magnitudes rescale the design, the lasso path is
// scanned on a log grid down to lambda = 0, and the model with the smallest
// BIC (noise variance from the OLS fit) is returned on the original scale.
Eigen::VectorXd adaptive_lasso_bic(const Eigen::MatrixXd& G, const Eigen::VectorXd& c, double c_yy, int n,
                                   const InnerConfig& inner) {
  const Eigen::Index p = c.size();
  const Eigen::VectorXd ols = G.ldlt().solve(c);
  const Eigen::VectorXd scale = ols.cwiseAbs();
  const Eigen::MatrixXd Gs = scale.asDiagonal() * G * scale.asDiagonal();
  const Eigen::VectorXd cs = scale.cwiseProduct(c);
  auto rss_over_n = [&](const Eigen::VectorXd& b) { return std::max(0.0, c_yy - 2.0 * cs.dot(b) + b.dot(Gs * b)); };
  const double dof_resid = static_cast<double>(n) - static_cast<double>(p) - 1.0;
  const double ols_rss = rss_over_n(Eigen::VectorXd::Ones(p)) * n;
  const double sigma2 = dof_resid > 0.0 ? ols_rss / dof_resid : ols_rss / n;
  if (!(sigma2 > 0.0)) return ols;

  const double lambda_max = cs.cwiseAbs().maxCoeff();
  constexpr int kGrid = 60;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd best = b;
  double best_bic = std::numeric_limits<double>::infinity();
  for (int g = 0; g <= kGrid; ++g) {
    if (lambda_max > 0.0) {
      const double lambda = g == kGrid ? 0.0 : lambda_max * std::pow(1e-4, static_cast<double>(g) / (kGrid - 1));
      b = g == kGrid ? Eigen::VectorXd::Ones(p) : lasso_gram(Gs, cs, lambda, inner, &b);
    }
    const auto dof = static_cast<double>((b.array() != 0.0).count());
    const double rss = rss_over_n(b) * n;
    const double bic = n * std::log(2.0 * M_PI * sigma2) + rss / sigma2 + std::log(static_cast<double>(n)) * dof;
    if (bic < best_bic) {
      best_bic = bic;
      best = b;
    }
    if (lambda_max <= 0.0) break;
  }
  return best.cwiseProduct(scale);
}

}  // namespace

std::string to_string(Method method) {
  for (const auto& mn : kMethodNames) {
    if (mn.method == method) return mn.name;
  }
  return "?";
}

Method parse_method(const std::string& name) {
  const std::string key = fold(name);
  for (const auto& mn : kMethodNames) {
    if (key == fold(mn.name)) return mn.method;
  }
  if (key == "golem") return Method::GolemEV;
  if (key == "sortnregress" || key == "varsort") return Method::VarSortnRegress;
  if (key == "r2sort") return Method::R2SortnRegress;
  throw ParameterError("unknown learner '" + name + "'");
}

std::string to_string(SortRegression regression) {
  return regression == SortRegression::Lasso ? "lasso" : "adaptive-bic";
}

SortRegression parse_sort_regression(const std::string& name) {
  const std::string key = fold(name);
  if (key == "lasso") return SortRegression::Lasso;
  if (key == "adaptivebic" || key == "adaptivelassobic") return SortRegression::AdaptiveLassoBic;
  throw ParameterError("unknown sort regression '" + name + "'");
}

bool uses_lambda_grid(Method method) {
  switch (method) {
    case Method::Notears:
    case Method::GolemEV:
    case Method::GolemNV:
    case Method::NoCurl:
    case Method::Dagma:
    case Method::VarSortnRegress:
    case Method::R2SortnRegress:
      return true;
    default:
      return false;
  }
}

const std::vector<double>& lambda1_grid() {
  static const std::vector<double> grid = {0.005, 0.01, 0.05, 0.5, 2.0, 5.0};
  return grid;
}

AlmConfig LearnerConfig::default_alm() {
  AlmConfig cfg;
  cfg.inner.max_iters = 5000;
  cfg.inner.tol = 1e-6;
  return cfg;
}

InnerConfig LearnerConfig::default_inner() {
  InnerConfig cfg;
  cfg.max_iters = 20000;
  cfg.tol = 1e-6;
  return cfg;
}

void LearnerConfig::validate() const {
  check_lambda(lambda1);
  if (!(lambda2 >= 0.0)) throw ParameterError("lambda2 must be >= 0");
  check_tau(tau);
  if (!(random_degree >= 0.0)) throw ParameterError("random_degree must be >= 0");
  constraint.validate();
  alm.validate();
  central.validate();
  inner.validate();
}

std::string LearnedGraph::to_json() const {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [i, j] : dag.edges()) edges.push_back({{"from", i}, {"to", j}, {"weight", W_raw(i, j)}});
  nlohmann::json doc = {
      {"method", to_string(method)},
      {"hyperparameters", {{"lambda1", lambda1}, {"lambda2", lambda2}, {"tau", tau}}},
      {"runtime_s", runtime_s},
      {"converged", converged},
      {"d", dag.size()},
      {"edges", edges},
  };
  if (!warnings.empty()) doc["warnings"] = warnings;
  return doc.dump();
}

Dag threshold(const Eigen::MatrixXd& W, double tau) {
  check_tau(tau);
  if (W.rows() != W.cols()) throw ShapeError("threshold: W must be square");
  const Eigen::Index d = W.rows();
  BoolMatrix adj = BoolMatrix::Constant(d, d, false);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) adj(i, j) = i != j && std::abs(W(i, j)) >= tau;
  }
  while (!is_acyclic(adj)) {
    const BoolMatrix reach = transitive_closure(adj);
    Eigen::Index bi = -1;
    Eigen::Index bj = -1;
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        if (!adj(i, j) || !reach(j, i)) continue;
        if (bi < 0 || std::abs(W(i, j)) < std::abs(W(bi, bj))) {
          bi = i;
          bj = j;
        }
      }
    }
    adj(bi, bj) = false;
  }
  return Dag(std::move(adj));
}

SmoothFn least_squares_score(const Eigen::MatrixXd& S) {
  return [S](const Eigen::MatrixXd& W, Eigen::MatrixXd* grad) {
    Eigen::MatrixXd IW = -W;
    IW.diagonal().array() += 1.0;
    const Eigen::MatrixXd SIW = S * IW;
    if (grad) *grad = -SIW;
    return 0.5 * IW.cwiseProduct(SIW).sum();
  };
}

SmoothFn golem_score(const Eigen::MatrixXd& S, int n, double lambda2, bool equal_variance) {
  if (!(S.trace() > 0.0)) throw DegenerateDataError("golem: data has zero variance");
  return [S, n, lambda2, equal_variance](const Eigen::MatrixXd& W, Eigen::MatrixXd* grad) {
    const Eigen::Index d = W.rows();
    Eigen::MatrixXd IW = -W;
    IW.diagonal().array() += 1.0;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(IW);
    const double det = lu.determinant();
    if (!(std::abs(det) >= 1e-12)) throw DomainError("golem: I - W is numerically singular", W);
    const Eigen::MatrixXd SIW = S * IW;
    const Eigen::VectorXd q = IW.cwiseProduct(SIW).colwise().sum().transpose();
    double loss = -std::log(std::abs(det));
    Eigen::MatrixXd g;
    if (equal_variance) {
      const double total = q.sum();
      if (!(total > 0.0)) throw DomainError("golem: zero residual", W);
      loss += 0.5 * static_cast<double>(d) * std::log(n * total);
      if (grad) g = -static_cast<double>(d) / total * SIW;
    } else {
      if (!(q.minCoeff() > 0.0)) throw DomainError("golem: zero residual", W);
      loss += 0.5 * (q.array() * n).log().sum();
      if (grad) g = -SIW * q.cwiseInverse().asDiagonal();
    }
    if (lambda2 > 0.0) {
      const HValue hv = h_with_grad(W, AcyclicityKind::expm_kind());
      loss += lambda2 * hv.h;
      if (grad) g += lambda2 * hv.grad;
    }
    if (grad) {
      g += lu.inverse().transpose();
      *grad = std::move(g);
    }
    return loss;
  };
}

LearnedGraph notears_linear(const Dataset& data, double lambda1, const AcyclicityKind& constraint,
                            const AlmConfig& cfg, double tau, const TraceSink& trace) {
  check_lambda(lambda1);
  check_tau(tau);
  const int d = data.d();
  AlmConfig alm = cfg;
  alm.inner.lambda1 = lambda1;
  alm.inner.zero_diagonal = true;
  const AlmResult res =
      alm_solve(least_squares_score(centered_covariance(data.X)), constraint, alm, Eigen::MatrixXd::Zero(d, d), trace);
  LearnedGraph out = finish(res.W, Method::Notears, lambda1, 0.0, tau, res.converged);
  warn_small_n(data, out);
  return out;
}

LearnedGraph golem(const Dataset& data, double lambda1, double lambda2, bool equal_variance,
                   const InnerConfig& cfg, double tau) {
  check_lambda(lambda1);
  check_tau(tau);
  if (!(lambda2 >= 0.0)) throw ParameterError("golem: lambda2 must be >= 0");
  const int d = data.d();
  InnerConfig inner = cfg;
  inner.lambda1 = lambda1;
  inner.zero_diagonal = true;
  // The iteration budget is the stopping rule, so hitting it is not a failure.
  const ProxResult res = prox_grad_minimize(golem_score(centered_covariance(data.X), data.n(), lambda2, equal_variance),
                                            Eigen::MatrixXd::Zero(d, d), inner);
  LearnedGraph out = finish(res.W, equal_variance ? Method::GolemEV : Method::GolemNV, lambda1, lambda2, tau, true);
  warn_small_n(data, out);
  return out;
}

Eigen::MatrixXd nocurl_map(const Eigen::MatrixXd& W, const Eigen::VectorXd& p) {
  if (W.rows() != W.cols() || p.size() != W.rows()) throw ShapeError("nocurl_map: shape mismatch");
  const Eigen::Index d = W.rows();
  Eigen::MatrixXd A(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) A(i, j) = W(i, j) * std::max(0.0, p(j) - p(i));
  }
  return A;
}

LearnedGraph nocurl(const Dataset& data, double lambda1, const LearnerConfig& cfg) {
  check_lambda(lambda1);
  check_tau(cfg.tau);
  const int d = data.d();
  const Eigen::MatrixXd S = centered_covariance(data.X);
  const SmoothFn ls = least_squares_score(S);

  // Preliminary solution: two ALM rounds of NOTEARS.
  AlmConfig alm = cfg.alm;
  alm.max_outer = 2;
  alm.inner.lambda1 = lambda1;
  const AlmResult pre = alm_solve(ls, cfg.constraint, alm, Eigen::MatrixXd::Zero(d, d), cfg.trace);

  // Potentials are the positions in a topological order of the thresholded
  // preliminary graph.
  const std::vector<int> order = threshold(pre.W, cfg.tau).topological_order();
  Eigen::VectorXd p(d);
  for (int r = 0; r < d; ++r) p(order[static_cast<std::size_t>(r)]) = r;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (p(j) > p(i)) W(i, j) = pre.W(i, j) / (p(j) - p(i));
    }
  }

  auto relu_grad = [d](const Eigen::VectorXd& pot) {
    Eigen::MatrixXd R(d, d);
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i < d; ++i) R(i, j) = std::max(0.0, pot(j) - pot(i));
    }
    return R;
  };
  auto objective = [&](const Eigen::MatrixXd& Wm, const Eigen::VectorXd& pot) {
    const Eigen::MatrixXd A = nocurl_map(Wm, pot);
    return ls(A, nullptr) + lambda1 * A.cwiseAbs().sum();
  };

  InnerConfig inner = cfg.inner;
  inner.lambda1 = lambda1;
  inner.zero_diagonal = true;
  inner.max_iters = std::min(inner.max_iters, 2000);
  bool settled = false;
  double value = objective(W, p);
  constexpr int kRounds = 30;
  constexpr int kPotentialSteps = 20;
  for (int round = 0; round < kRounds && !settled; ++round) {
    const double before = value;
    // W-step: weighted lasso with weights ReLU(grad p).
    const Eigen::MatrixXd R = relu_grad(p);
    const SmoothFn fw = [&](const Eigen::MatrixXd& Wm, Eigen::MatrixXd* grad) {
      Eigen::MatrixXd gA;
      const double f = ls(Wm.cwiseProduct(R), grad ? &gA : nullptr);
      if (grad) *grad = gA.cwiseProduct(R);
      return f;
    };
    W = prox_grad_minimize(fw, W, inner, &R).W;

    // p-step: gradient descent with backtracking on the full objective.
    double step = 1.0;
    value = objective(W, p);
    for (int it = 0; it < kPotentialSteps; ++it) {
      const Eigen::MatrixXd A = nocurl_map(W, p);
      Eigen::MatrixXd gA;
      ls(A, &gA);
      Eigen::VectorXd gp = Eigen::VectorXd::Zero(d);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          if (p(j) <= p(i)) continue;
          const double g = gA(i, j) * W(i, j) + lambda1 * std::abs(W(i, j));
          gp(j) += g;
          gp(i) -= g;
        }
      }
      if (gp.squaredNorm() == 0.0) break;
      bool moved = false;
      for (int halvings = 0; halvings < 40; ++halvings) {
        const Eigen::VectorXd trial = p - step * gp;
        const double v = objective(W, trial);
        if (v <= value - 1e-4 * step * gp.squaredNorm()) {
          p = trial;
          value = v;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
      step *= 2.0;
    }
    settled = std::abs(before - value) <= 1e-8 * std::max(1.0, std::abs(value));
  }

  // The round budget is the stopping rule, as for GOLEM.
  LearnedGraph out = finish(nocurl_map(W, p), Method::NoCurl, lambda1, 0.0, cfg.tau, true);
  warn_small_n(data, out);
  return out;
}

LearnedGraph dagma_linear(const Dataset& data, double lambda1, const CentralPathConfig& cfg, double tau,
                          const TraceSink& trace) {
  check_lambda(lambda1);
  check_tau(tau);
  const int d = data.d();
  CentralPathConfig central = cfg;
  central.inner.lambda1 = lambda1;
  central.inner.zero_diagonal = true;
  const CentralPathResult res =
      central_path_solve(least_squares_score(centered_covariance(data.X)), central, Eigen::MatrixXd::Zero(d, d), trace);
  LearnedGraph out = finish(res.W, Method::Dagma, lambda1, 0.0, tau, true);
  warn_small_n(data, out);
  return out;
}

std::vector<int> criterion_order(const Eigen::VectorXd& values) {
  std::vector<int> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&values](int a, int b) { return values(a) < values(b); });
  return order;
}

LearnedGraph sortnregress(const Dataset& data, SortCriterion criterion, double lambda1, const InnerConfig& cfg,
                          SortRegression regression) {
  check_lambda(lambda1);
  const int d = data.d();
  const int n = data.n();
  const Eigen::MatrixXd S = centered_covariance(data.X);
  bool ridge = false;
  const std::vector<int> order = criterion_order(sort_criterion(data.X, criterion, &ridge));
  std::vector<std::string> warnings;
  if (ridge) warnings.push_back("singular covariance: R^2 computed with ridge 1e-6");

  InnerConfig inner = cfg;
  inner.zero_diagonal = false;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, d);
  for (int r = 1; r < d; ++r) {
    const int j = order[static_cast<std::size_t>(r)];
    Eigen::MatrixXd Spp(r, r);
    Eigen::VectorXd spj(r);
    for (int a = 0; a < r; ++a) {
      spj(a) = S(order[static_cast<std::size_t>(a)], j);
      for (int b = 0; b < r; ++b) Spp(a, b) = S(order[static_cast<std::size_t>(a)], order[static_cast<std::size_t>(b)]);
    }
    if (Spp.llt().info() != Eigen::Success) {
      Spp.diagonal().array() += 1e-6;
      warnings.push_back("singular predecessor design for node " + std::to_string(j) + ": ridge 1e-6");
    }
    const Eigen::VectorXd beta = regression == SortRegression::Lasso
                                     ? lasso_gram(Spp, spj, lambda1, inner)
                                     : adaptive_lasso_bic(Spp, spj, S(j, j), n, inner);
    for (int a = 0; a < r; ++a) W(order[static_cast<std::size_t>(a)], j) = beta(a);
  }
  BoolMatrix support = W.array() != 0.0;
  LearnedGraph out;
  out.dag = Dag(std::move(support));
  out.W_raw = std::move(W);
  out.method = criterion == SortCriterion::Var ? Method::VarSortnRegress : Method::R2SortnRegress;
  out.lambda1 = regression == SortRegression::Lasso ? lambda1 : 0.0;
  out.warnings = std::move(warnings);
  warn_small_n(data, out);
  return out;
}

LearnedGraph random_baseline(int d, double k, std::uint64_t seed) {
  const Dag g = gen_er(d, k, seed);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, d);
  for (const auto& [i, j] : g.edges()) W(i, j) = 1.0;
  LearnedGraph out = finish(std::move(W), Method::Random, 0.0, 0.0, 0.3, true);
  return out;
}

LearnedGraph run_learner(const Dataset& data, const LearnerConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  LearnedGraph out;
  switch (cfg.method) {
    case Method::Notears:
      out = notears_linear(data, cfg.lambda1, cfg.constraint, cfg.alm, cfg.tau, cfg.trace);
      break;
    case Method::GolemEV:
    case Method::GolemNV:
      out = golem(data, cfg.lambda1, cfg.lambda2, cfg.method == Method::GolemEV, cfg.inner, cfg.tau);
      break;
    case Method::NoCurl:
      out = nocurl(data, cfg.lambda1, cfg);
      break;
    case Method::Dagma:
      out = dagma_linear(data, cfg.lambda1, cfg.central, cfg.tau, cfg.trace);
      break;
    case Method::VarSortnRegress:
      out = sortnregress(data, SortCriterion::Var, cfg.lambda1, cfg.inner, cfg.sort_regression);
      break;
    case Method::R2SortnRegress:
      out = sortnregress(data, SortCriterion::R2, cfg.lambda1, cfg.inner, cfg.sort_regression);
      break;
    case Method::Random:
      out = random_baseline(data.d(), cfg.random_degree, seed);
      break;
  }
  out.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace dagbench
