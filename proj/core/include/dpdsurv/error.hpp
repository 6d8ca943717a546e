#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dpdsurv {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Evaluation at a point where a function (or its log-derivative) is singular.
class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Adaptive quadrature ran out of subdivisions before meeting tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what), estimate_(estimate), error_bound_(error_bound) {}

  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

/// A linear system whose condition estimate exceeds the admissible bound.
class NearSingularError : public std::runtime_error {
 public:
  NearSingularError(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}

  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Information matrix (J, or the Wald kernel) is numerically degenerate.
class DegenerateInformationError : public NearSingularError {
 public:
  using NearSingularError::NearSingularError;
};

/// Violated precondition of a statistical procedure (e.g. no events to fit).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or invalid input data. `row` is 1-based, 0 when not row-specific.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::size_t row = 0)
      : std::runtime_error(what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace dpdsurv
