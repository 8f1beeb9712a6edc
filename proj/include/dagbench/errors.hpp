#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dagbench {

/// Invalid argument or configuration value.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Matrix or vector with the wrong dimensions.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data that cannot be processed (constant columns, non-finite values).
class DegenerateDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file that does not follow the expected format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure (overflow, failed factorization, non-finite objective).
/// Carries the last finite iterate when one is available.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, Eigen::MatrixXd last = {})
      : std::runtime_error(what), last_iterate_(std::move(last)) {}

  const Eigen::MatrixXd& last_iterate() const { return last_iterate_; }

 private:
  Eigen::MatrixXd last_iterate_;
};

/// Argument outside the domain of a function, e.g. sI - W∘W not an M-matrix.
class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// An outer optimization loop that stalled.
class NonConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace dagbench
