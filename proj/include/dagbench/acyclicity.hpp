#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

namespace dagbench {

/// Throws ShapeError unless W is square, finite, and has a zero diagonal.
void validate_weighted_graph(const Eigen::MatrixXd& W);

/// Matrix exponential by scaling and squaring with the degree-13 Pade
/// approximant. Throws NumericalError on non-finite input or overflow.
Eigen::MatrixXd expm(const Eigen::MatrixXd& M);

double h_expm(const Eigen::MatrixXd& W);
Eigen::MatrixXd grad_h_expm(const Eigen::MatrixXd& W);

/// tr[(I + alpha W∘W)^d] - d.
double h_poly(const Eigen::MatrixXd& W, double alpha);
Eigen::MatrixXd grad_h_poly(const Eigen::MatrixXd& W, double alpha);

/// -log det(sI - W∘W) + d log s. Defined only where sI - W∘W is an M-matrix;
/// outside that region DomainError is thrown.
double h_ldet(const Eigen::MatrixXd& W, double s);
Eigen::MatrixXd grad_h_ldet(const Eigen::MatrixXd& W, double s);
/// Whether sI - W∘W has all leading principal minors positive.
bool in_ldet_domain(const Eigen::MatrixXd& W, double s);

enum class AcyclicityType { Expm, Poly, LogDet };

struct AcyclicityKind {
  AcyclicityType type = AcyclicityType::Expm;
  /// Poly coefficient; unset means 1/d.
  std::optional<double> alpha;
  /// LogDet scale.
  double s = 1.0;

  static AcyclicityKind expm_kind() { return {AcyclicityType::Expm, std::nullopt, 1.0}; }
  static AcyclicityKind poly(std::optional<double> alpha = std::nullopt) {
    return {AcyclicityType::Poly, alpha, 1.0};
  }
  static AcyclicityKind logdet(double s = 1.0) { return {AcyclicityType::LogDet, std::nullopt, s}; }

  void validate() const;
  std::string label() const;
};

AcyclicityType parse_acyclicity_type(const std::string& name);

struct HValue {
  double h = 0.0;
  Eigen::MatrixXd grad;
};

double h_value(const Eigen::MatrixXd& W, const AcyclicityKind& kind);
/// Value and gradient sharing one matrix-function evaluation.
HValue h_with_grad(const Eigen::MatrixXd& W, const AcyclicityKind& kind);

}  // namespace dagbench
