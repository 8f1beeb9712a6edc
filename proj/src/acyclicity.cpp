#include "dagbench/acyclicity.hpp"

#include <cctype>
#include <cmath>

#include "dagbench/errors.hpp"

namespace dagbench {

namespace {

void require_square(const Eigen::MatrixXd& M, const char* who) {
  if (M.rows() != M.cols()) throw ShapeError(std::string(who) + ": matrix must be square");
  if (!M.allFinite()) throw NumericalError(std::string(who) + ": non-finite input");
}

Eigen::MatrixXd checked(Eigen::MatrixXd M, const char* who) {
  if (!M.allFinite()) throw NumericalError(std::string(who) + ": overflow");
  return M;
}

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& B, int p) {
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(B.rows(), B.cols());
  Eigen::MatrixXd base = B;
  while (p > 0) {
    if (p & 1) result = result * base;
    p >>= 1;
    if (p > 0) base = base * base;
  }
  return result;
}

double resolve_alpha(std::optional<double> alpha, Eigen::Index d) {
  const double a = alpha ? *alpha : 1.0 / static_cast<double>(d);
  if (!(a > 0.0)) throw ParameterError("h_poly: alpha must be positive");
  return a;
}

// LU of sI - W∘W without pivoting. Every pivot must be positive; the first
// failure throws DomainError.
Eigen::MatrixXd ldet_factor(const Eigen::MatrixXd& W, double s) {
  require_square(W, "h_ldet");
  if (!(s > 0.0)) throw ParameterError("h_ldet: s must be positive");
  const Eigen::Index d = W.rows();
  Eigen::MatrixXd A = -W.cwiseProduct(W);
  A.diagonal().array() += s;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double pivot = A(k, k);
    if (!(pivot > 0.0)) throw DomainError("h_ldet: sI - W∘W is not an M-matrix", W);
    const Eigen::Index rest = d - k - 1;
    if (rest == 0) break;
    A.col(k).tail(rest) /= pivot;
    A.bottomRightCorner(rest, rest).noalias() -= A.col(k).tail(rest) * A.row(k).tail(rest);
  }
  return A;
}

double ldet_value(const Eigen::MatrixXd& lu, double s) {
  const auto d = static_cast<double>(lu.rows());
  return -lu.diagonal().array().log().sum() + d * std::log(s);
}

Eigen::MatrixXd ldet_grad(const Eigen::MatrixXd& lu, const Eigen::MatrixXd& W) {
  const Eigen::Index d = lu.rows();
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(d, d);
  lu.triangularView<Eigen::UnitLower>().solveInPlace(inv);
  lu.triangularView<Eigen::Upper>().solveInPlace(inv);
  return 2.0 * inv.transpose().cwiseProduct(W);
}

}  // namespace

void validate_weighted_graph(const Eigen::MatrixXd& W) {
  if (W.rows() != W.cols()) throw ShapeError("weighted graph must be square");
  if (!W.allFinite()) throw ShapeError("weighted graph has non-finite entries");
  if ((W.diagonal().array() != 0.0).any()) throw ShapeError("weighted graph has a nonzero diagonal");
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& M) {
  require_square(M, "expm");
  const Eigen::Index d = M.rows();
  if (d == 0) return M;
  if (M.isZero(0.0)) return Eigen::MatrixXd::Identity(d, d);
  static constexpr double b[] = {64764752532480000.0,
                                 32382376266240000.0,
                                 7771770303897600.0,
                                 1187353796428800.0,
                                 129060195264000.0,
                                 10559470521600.0,
                                 670442572800.0,
                                 33522128640.0,
                                 1323241920.0,
                                 40840800.0,
                                 960960.0,
                                 16380.0,
                                 182.0,
                                 1.0};
  static constexpr double kTheta13 = 5.371920351148152;

  const double norm = M.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > kTheta13) squarings = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
  const Eigen::MatrixXd A = M / std::ldexp(1.0, squarings);

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd A2 = A * A;
  const Eigen::MatrixXd A4 = A2 * A2;
  const Eigen::MatrixXd A6 = A4 * A2;
  const Eigen::MatrixXd inner_u = b[13] * A6 + b[11] * A4 + b[9] * A2;
  const Eigen::MatrixXd U = A * (A6 * inner_u + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
  const Eigen::MatrixXd inner_v = b[12] * A6 + b[10] * A4 + b[8] * A2;
  const Eigen::MatrixXd V = A6 * inner_v + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;

  Eigen::MatrixXd E = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < squarings; ++k) E = E * E;
  return checked(std::move(E), "expm");
}

double h_expm(const Eigen::MatrixXd& W) {
  require_square(W, "h_expm");
  return expm(W.cwiseProduct(W)).trace() - static_cast<double>(W.rows());
}

Eigen::MatrixXd grad_h_expm(const Eigen::MatrixXd& W) {
  require_square(W, "grad_h_expm");
  return 2.0 * expm(W.cwiseProduct(W)).transpose().cwiseProduct(W);
}

double h_poly(const Eigen::MatrixXd& W, double alpha) {
  require_square(W, "h_poly");
  if (!(alpha > 0.0)) throw ParameterError("h_poly: alpha must be positive");
  const auto d = static_cast<int>(W.rows());
  Eigen::MatrixXd B = alpha * W.cwiseProduct(W);
  B.diagonal().array() += 1.0;
  const double value = matrix_power(B, d).trace() - d;
  if (!std::isfinite(value)) throw NumericalError("h_poly: overflow", W);
  return value;
}

Eigen::MatrixXd grad_h_poly(const Eigen::MatrixXd& W, double alpha) {
  require_square(W, "grad_h_poly");
  if (!(alpha > 0.0)) throw ParameterError("h_poly: alpha must be positive");
  const auto d = static_cast<int>(W.rows());
  if (d == 0) return W;
  Eigen::MatrixXd B = alpha * W.cwiseProduct(W);
  B.diagonal().array() += 1.0;
  return checked(2.0 * d * alpha * matrix_power(B, d - 1).transpose().cwiseProduct(W), "grad_h_poly");
}

double h_ldet(const Eigen::MatrixXd& W, double s) { return ldet_value(ldet_factor(W, s), s); }

Eigen::MatrixXd grad_h_ldet(const Eigen::MatrixXd& W, double s) { return ldet_grad(ldet_factor(W, s), W); }

bool in_ldet_domain(const Eigen::MatrixXd& W, double s) {
  try {
    ldet_factor(W, s);
    return true;
  } catch (const DomainError&) {
    return false;
  }
}

void AcyclicityKind::validate() const {
  if (alpha && !(*alpha > 0.0)) throw ParameterError("acyclicity: alpha must be positive");
  if (!(s > 0.0)) throw ParameterError("acyclicity: s must be positive");
}

std::string AcyclicityKind::label() const {
  switch (type) {
    case AcyclicityType::Expm:
      return "expm";
    case AcyclicityType::Poly:
      return "poly";
    case AcyclicityType::LogDet:
      return "logdet";
  }
  return "?";
}

AcyclicityType parse_acyclicity_type(const std::string& name) {
  std::string lowered;
  for (char c : name) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lowered == "expm") return AcyclicityType::Expm;
  if (lowered == "poly") return AcyclicityType::Poly;
  if (lowered == "logdet" || lowered == "ldet") return AcyclicityType::LogDet;
  throw ParameterError("unknown acyclicity constraint '" + name + "'");
}

double h_value(const Eigen::MatrixXd& W, const AcyclicityKind& kind) {
  switch (kind.type) {
    case AcyclicityType::Expm:
      return h_expm(W);
    case AcyclicityType::Poly:
      return h_poly(W, resolve_alpha(kind.alpha, W.rows()));
    case AcyclicityType::LogDet:
      return h_ldet(W, kind.s);
  }
  return 0.0;
}

HValue h_with_grad(const Eigen::MatrixXd& W, const AcyclicityKind& kind) {
  switch (kind.type) {
    case AcyclicityType::Expm: {
      require_square(W, "h_expm");
      const Eigen::MatrixXd E = expm(W.cwiseProduct(W));
      return {E.trace() - static_cast<double>(W.rows()), 2.0 * E.transpose().cwiseProduct(W)};
    }
    case AcyclicityType::Poly: {
      require_square(W, "h_poly");
      const double alpha = resolve_alpha(kind.alpha, W.rows());
      const auto d = static_cast<int>(W.rows());
      if (d == 0) return {0.0, W};
      Eigen::MatrixXd B = alpha * W.cwiseProduct(W);
      B.diagonal().array() += 1.0;
      const Eigen::MatrixXd P = matrix_power(B, d - 1);
      const double h = (P * B).trace() - d;
      if (!std::isfinite(h)) throw NumericalError("h_poly: overflow", W);
      return {h, checked(2.0 * d * alpha * P.transpose().cwiseProduct(W), "grad_h_poly")};
    }
    case AcyclicityType::LogDet: {
      const Eigen::MatrixXd lu = ldet_factor(W, kind.s);
      return {ldet_value(lu, kind.s), ldet_grad(lu, W)};
    }
  }
  return {};
}

}  // namespace dagbench
