#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace unlearn {

// Root of every error the library raises. The CLI maps the three families
// below onto exit codes 2 (config), 3 (data) and 4 (numerical degeneracy).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad parameters or configuration: out-of-range epsilon, k outside [1, d-1],
// unknown experiment names.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data violating a documented contract: ragged CSV rows, row norms
// above B, disconnected graphs, non-separable SVM data.
class DataError : public Error {
 public:
  using Error::Error;
};

// A sensitivity or curvature quantity is degenerate (zero eigengap, zero
// strong convexity, singular Hessian) so no finite certificate exists.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Calibrating noise to anything other than a retain report.
class CalibrationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class NonSeparableError : public DataError {
 public:
  using DataError::DataError;
};

// The refined root bound's hypothesis lambda0^2 >= 4ML/n fails.
class ConditionFailedError : public DegenerateError {
 public:
  ConditionFailedError(const std::string& what, double deficit)
      : DegenerateError(what), deficit_(deficit) {}
  double deficit() const noexcept { return deficit_; }

 private:
  double deficit_;
};

class ConvergenceError : public DegenerateError {
 public:
  using DegenerateError::DegenerateError;
};

/// Compact scientific notation for diagnostics.
inline std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace unlearn
