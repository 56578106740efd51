#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace neuroskin {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid construction or configuration input (dimensions, grouping, schema).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Mismatched series or matrix shapes.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (non-finite input, bad material).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Out-of-range element or node id.
class LookupError : public Error {
public:
  using Error::Error;
};

/// The constrained stiffness matrix is not positive definite.
class AssemblyError : public Error {
public:
  using Error::Error;
};

/// The per-step neuron fixed-point iteration did not converge.
class StepError : public Error {
public:
  StepError(const std::string& what, double residual, double time)
      : Error(what), residual_(residual), time_(time) {}

  double residual() const noexcept { return residual_; }
  double time() const noexcept { return time_; }

private:
  double residual_;
  double time_;
};

/// Malformed text input; line numbers are 1-based.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line) : Error(what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// A simulation behind an objective evaluation failed at parameter vector `x`.
class EvaluationError : public Error {
public:
  EvaluationError(const std::string& what, std::vector<double> x)
      : Error(what), x_(std::move(x)) {}

  const std::vector<double>& x() const noexcept { return x_; }

private:
  std::vector<double> x_;
};

/// A finite-difference gradient failed; `index` 0 is the base point, i+1 the i-th perturbation.
class GradientError : public Error {
public:
  GradientError(const std::string& what, std::size_t index) : Error(what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_;
};

}  // namespace neuroskin
