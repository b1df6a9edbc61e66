#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seesmp {

/// Bad argument values (non-positive horizon, misaligned spike, empty ensemble, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Incomplete or inconsistent problem set-up (missing derivative callback,
/// enumeration cap exceeded, malformed config file).
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear solve failure, NaN/Inf blow-up, non-contracting inner iteration.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, std::size_t step = npos)
      : std::runtime_error(step == npos ? what : what + " (step " + std::to_string(step) + ")"),
        step_(step) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Picard iteration that failed to converge within its iteration budget.
class NonContractionError : public NumericalError {
 public:
  NonContractionError(const std::string& what, double last_ratio)
      : NumericalError(what + " (last contraction ratio " + std::to_string(last_ratio) + ")"),
        last_ratio_(last_ratio) {}

  double last_ratio() const noexcept { return last_ratio_; }

 private:
  double last_ratio_;
};

/// Too few usable points for a regression or an order fit.
class InsufficientDataError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace seesmp
