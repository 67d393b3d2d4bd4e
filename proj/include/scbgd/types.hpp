#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace scbgd {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problem construction with an unusable dimension or shape.
class InvalidProblemError : public Error {
 public:
  using Error::Error;
};

/// Column or row selection with duplicate or out-of-range indices.
class InvalidBlockError : public Error {
 public:
  using Error::Error;
};

/// Solver or experiment parameters outside their admissible range.
class InvalidConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite residual or Jacobian value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// A step-size denominator vanished while the block gradient did not.
class NumericalInconsistencyError : public Error {
 public:
  using Error::Error;
};

/// Unknown problem name.
class RegistryError : public Error {
 public:
  using Error::Error;
};

class TooManyBlocksError : public Error {
 public:
  using Error::Error;
};

/// Convergence constants that make the decrease factor non-positive.
class InvalidConstantsError : public Error {
 public:
  using Error::Error;
};

/// Incremental residual update requested on a problem without row supports.
class UnsupportedModeError : public Error {
 public:
  using Error::Error;
};

class NoNonzeroSingularValueError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed experiment config; carries the 1-based line number (0 when the
/// problem is not tied to a single line).
class ConfigParseError : public Error {
 public:
  ConfigParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Evaluation failure inside the iteration loop, tagged with the iteration
/// at which it occurred.
class SolveError : public Error {
 public:
  SolveError(std::int64_t iteration, const std::string& what)
      : Error("iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}

  [[nodiscard]] std::int64_t iteration() const noexcept { return iteration_; }

 private:
  std::int64_t iteration_;
};

}  // namespace scbgd
