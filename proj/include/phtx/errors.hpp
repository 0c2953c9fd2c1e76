#pragma once

#include <stdexcept>
#include <string>

namespace phtx {

/// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or lengths that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A vector that must be normalized (or a distribution) has no direction.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Metric not positive definite after regularization.
class SingularMetricError : public Error {
 public:
  using Error::Error;
};

/// Iterative solve ran out of iterations.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Precondition on an argument failed (negative weight, bad step, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Least-squares fit is rank deficient beyond its gauge freedom.
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace phtx
