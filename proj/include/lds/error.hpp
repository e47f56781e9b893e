#pragma once

#include <stdexcept>
#include <string>

namespace lds {

// Structural misuse: wrong shapes, mismatched dimensions.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A documented precondition was violated (asymmetric input, nonzero
// residual where zero is required, bad epsilon, ...).
class ContractError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Malformed run configuration or schema violation.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Broken or inconsistent input data (files, trajectories).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: non-finite values, iteration caps exceeded.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

// A model prediction left the representable range. Carries the offending
// trajectory and sample time so a trainer can report where a run blew up.
class PredictionOverflow : public NumericError {
public:
  PredictionOverflow(int trajectory_id, double time)
      : NumericError("prediction overflow in trajectory " +
                     std::to_string(trajectory_id) + " at t = " +
                     std::to_string(time)),
        trajectory_id_(trajectory_id), time_(time) {}
  int trajectory_id() const { return trajectory_id_; }
  double time() const { return time_; }

private:
  int trajectory_id_;
  double time_;
};

}  // namespace lds
