#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jointprice {

/// Broad failure class. The CLI maps these onto exit codes 1 and 2.
enum class ErrorCategory { Validation, Computation };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ErrorCategory category() const noexcept = 0;
};

/// Input outside the domain of an operation.
class ValidationError : public Error {
 public:
  using Error::Error;
  ErrorCategory category() const noexcept override { return ErrorCategory::Validation; }
};

/// Numerical or data-driven failure on otherwise well-formed input.
class ComputationError : public Error {
 public:
  using Error::Error;
  ErrorCategory category() const noexcept override { return ErrorCategory::Computation; }
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Requested loading lies below the minimum attainable joint loading.
class NoRealRoots : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NoConvergence : public ComputationError {
 public:
  NoConvergence(const std::string& what, double last_residual)
      : ComputationError(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

class InfeasibleDemand : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

class DataMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateFactor : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

/// Too few samples, zero variance and similar.
class DegenerateData : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

class MalformedRow : public ValidationError {
 public:
  MalformedRow(const std::string& what, std::size_t line, std::size_t column)
      : ValidationError(what), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class NonPositiveLoss : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DuplicatePeriod : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace jointprice
