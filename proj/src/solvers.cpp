#include "dagbench/solvers.hpp"

#include <cmath>
#include <limits>

#include "dagbench/errors.hpp"

namespace dagbench {

namespace {

constexpr double kMaxStep = 1e8;
constexpr double kStallMu = 1e16;
constexpr int kStallRounds = 5;

// Trial points outside the domain or past overflow count as +inf so the line
// search halves the step.
double evaluate(const SmoothFn& f, const Eigen::MatrixXd& W, Eigen::MatrixXd* grad) {
  try {
    return f(W, grad);
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::infinity();
  }
}

double l1_term(const Eigen::MatrixXd& W, double lambda1, const Eigen::MatrixXd* weights) {
  if (lambda1 == 0.0) return 0.0;
  if (weights) return lambda1 * weights->cwiseProduct(W.cwiseAbs()).sum();
  return lambda1 * W.cwiseAbs().sum();
}

Eigen::MatrixXd prox_step(const Eigen::MatrixXd& V, double t, double lambda1, const Eigen::MatrixXd* weights,
                          bool zero_diagonal) {
  Eigen::MatrixXd out(V.rows(), V.cols());
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
      const double c = weights ? (*weights)(i, j) : 1.0;
      out(i, j) = soft_threshold(V(i, j), t * lambda1 * c);
    }
  }
  if (zero_diagonal) out.diagonal().setZero();
  return out;
}

}  // namespace

double soft_threshold(double x, double t) {
  if (t < 0.0) throw ParameterError("soft_threshold: threshold must be non-negative");
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

void InnerConfig::validate() const {
  if (!(step > 0.0)) throw ParameterError("inner solver: step must be positive");
  if (max_iters < 1) throw ParameterError("inner solver: max_iters must be positive");
  if (!(tol > 0.0)) throw ParameterError("inner solver: tol must be positive");
  if (!(lambda1 >= 0.0)) throw ParameterError("inner solver: lambda1 must be non-negative");
  if (max_halvings < 1) throw ParameterError("inner solver: max_halvings must be positive");
}

ProxResult prox_grad_minimize(const SmoothFn& f, const Eigen::MatrixXd& init, const InnerConfig& cfg,
                              const Eigen::MatrixXd* l1_weights) {
  cfg.validate();
  if (l1_weights && (l1_weights->rows() != init.rows() || l1_weights->cols() != init.cols())) {
    throw ShapeError("prox_grad_minimize: l1 weights do not match the iterate");
  }
  if (cfg.zero_diagonal && init.rows() != init.cols()) {
    throw ShapeError("prox_grad_minimize: zero_diagonal needs a square iterate");
  }
  ProxResult res;
  res.W = init;
  if (cfg.zero_diagonal) res.W.diagonal().setZero();
  Eigen::MatrixXd grad;
  double fW = f(res.W, &grad);
  if (!std::isfinite(fW)) throw NumericalError("prox_grad_minimize: objective not finite at init", res.W);

  const bool backtrack = cfg.step_rule == StepRule::Backtracking;
  double t = cfg.step;
  Eigen::MatrixXd trial_grad;
  for (res.iterations = 0; res.iterations < cfg.max_iters;) {
    if (backtrack && res.iterations > 0) t = std::min(2.0 * t, kMaxStep);
    Eigen::MatrixXd trial;
    double f_trial = 0.0;
    for (int halvings = 0;; ++halvings) {
      trial = prox_step(res.W - t * grad, t, cfg.lambda1, l1_weights, cfg.zero_diagonal);
      f_trial = evaluate(f, trial, &trial_grad);
      if (!backtrack) {
        if (!std::isfinite(f_trial)) {
          throw NumericalError("prox_grad_minimize: objective not finite", res.W);
        }
        break;
      }
      const Eigen::MatrixXd D = trial - res.W;
      const double dd = D.squaredNorm();
      const double bound = fW + grad.cwiseProduct(D).sum() + dd / (2.0 * t);
      if (std::isfinite(f_trial)) {
        if (f_trial <= bound) break;
        // Within roundoff of the bound the value test is noise; fall back to
        // the curvature form, which is exact for quadratics.
        const bool roundoff = f_trial <= bound + 1e-12 * std::max(1.0, std::abs(fW));
        if (roundoff && (trial_grad - grad).cwiseProduct(D).sum() <= dd / t) break;
      }
      if (halvings + 1 >= cfg.max_halvings) {
        throw NumericalError("prox_grad_minimize: line search exhausted", res.W);
      }
      t *= 0.5;
    }
    ++res.iterations;
    const double mapping = (trial - res.W).cwiseAbs().maxCoeff() / t;
    res.W = std::move(trial);
    fW = f_trial;
    grad.swap(trial_grad);
    if (mapping < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.objective = fW + l1_term(res.W, cfg.lambda1, l1_weights);
  return res;
}

void AlmConfig::validate() const {
  if (!(eta > 1.0)) throw ParameterError("alm: eta must exceed 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("alm: gamma must lie in (0, 1)");
  if (!(eps_h > 0.0)) throw ParameterError("alm: eps_h must be positive");
  if (max_outer < 1) throw ParameterError("alm: max_outer must be positive");
  if (!(mu0 > 0.0)) throw ParameterError("alm: mu0 must be positive");
  inner.validate();
}

bool AlmConfig::canonical() const { return eps_h == 1e-6 || eps_h == 1e-8 || eps_h == 1e-10; }

AlmResult alm_solve(const SmoothFn& score, const SmoothFn& constraint, const AlmConfig& cfg,
                    const Eigen::MatrixXd& init, const TraceSink& trace) {
  cfg.validate();
  AlmResult res;
  res.W = init;
  res.alpha = cfg.alpha0;
  res.mu = cfg.mu0;
  double h_prev = std::abs(constraint(init, nullptr));
  int stalled = 0;
  for (int round = 1; round <= cfg.max_outer; ++round) {
    const double alpha = res.alpha;
    const double mu = res.mu;
    const SmoothFn augmented = [&](const Eigen::MatrixXd& W, Eigen::MatrixXd* grad) {
      Eigen::MatrixXd gf;
      Eigen::MatrixXd gc;
      const double f = score(W, grad ? &gf : nullptr);
      const double c = constraint(W, grad ? &gc : nullptr);
      if (grad) *grad = gf + (alpha + mu * c) * gc;
      return f + alpha * c + 0.5 * mu * c * c;
    };
    const ProxResult inner = prox_grad_minimize(augmented, res.W, cfg.inner);
    res.W = inner.W;
    const double c = constraint(res.W, nullptr);
    const double h = std::abs(c);
    res.h = h;
    res.outer_iterations = round;
    res.h_trace.push_back(h);
    if (trace) trace({round, score(res.W, nullptr), c, alpha, mu});
    if (h < cfg.eps_h) {
      res.converged = true;
      return res;
    }
    res.alpha += mu * c;
    stalled = (h >= h_prev && mu >= kStallMu) ? stalled + 1 : 0;
    if (stalled >= kStallRounds) {
      throw NonConvergenceError("alm: constraint stalled at h = " + std::to_string(h) + " with mu = " +
                                    std::to_string(mu),
                                res.W);
    }
    if (h > cfg.gamma * h_prev) res.mu *= cfg.eta;
    h_prev = h;
  }
  return res;
}

AlmResult alm_solve(const SmoothFn& score, const AcyclicityKind& constraint, const AlmConfig& cfg,
                    const Eigen::MatrixXd& init, const TraceSink& trace) {
  constraint.validate();
  const SmoothFn c = [&constraint](const Eigen::MatrixXd& W, Eigen::MatrixXd* grad) {
    if (!grad) return h_value(W, constraint);
    HValue hv = h_with_grad(W, constraint);
    *grad = std::move(hv.grad);
    return hv.h;
  };
  return alm_solve(score, c, cfg, init, trace);
}

InnerConfig CentralPathConfig::default_inner() {
  InnerConfig inner;
  inner.max_iters = 30000;
  inner.tol = 1e-6;
  return inner;
}

void CentralPathConfig::validate() const {
  if (s.empty() || mu.empty()) throw ParameterError("central path: schedules must be nonempty");
  for (double v : s) {
    if (!(v > 0.0)) throw ParameterError("central path: s values must be positive");
  }
  for (double v : mu) {
    if (!(v > 0.0)) throw ParameterError("central path: mu values must be positive");
  }
  if (!(s_bump > 0.0)) throw ParameterError("central path: s_bump must be positive");
  inner.validate();
}

CentralPathResult central_path_solve(const SmoothFn& score, const CentralPathConfig& cfg,
                                     const Eigen::MatrixXd& init, const TraceSink& trace) {
  cfg.validate();
  validate_weighted_graph(init);
  CentralPathResult res;
  res.W = init;
  const std::size_t stages = std::max(cfg.s.size(), cfg.mu.size());
  for (std::size_t stage = 0; stage < stages; ++stage) {
    const double mu = cfg.mu[std::min(stage, cfg.mu.size() - 1)];
    double s = cfg.s[std::min(stage, cfg.s.size() - 1)];
    for (int bumps = 0; !in_ldet_domain(res.W, s); ++bumps) {
      if (bumps >= 100) throw NumericalError("central path: warm start outside every tried domain", res.W);
      s += cfg.s_bump;
    }
    res.s_used.push_back(s);
    const SmoothFn stage_fn = [&](const Eigen::MatrixXd& W, Eigen::MatrixXd* grad) {
      Eigen::MatrixXd gf;
      const double f = score(W, grad ? &gf : nullptr);
      if (!grad) return mu * f + h_ldet(W, s);
      const HValue hv = h_with_grad(W, AcyclicityKind::logdet(s));
      *grad = mu * gf + hv.grad;
      return mu * f + hv.h;
    };
    InnerConfig inner = cfg.inner;
    inner.lambda1 = mu * cfg.inner.lambda1;
    const ProxResult pr = prox_grad_minimize(stage_fn, res.W, inner);
    res.W = pr.W;
    res.iterations += pr.iterations;
    res.h = h_ldet(res.W, s);
    if (trace) trace({static_cast<int>(stage) + 1, score(res.W, nullptr), res.h, s, mu});
  }
  return res;
}

}  // namespace dagbench
