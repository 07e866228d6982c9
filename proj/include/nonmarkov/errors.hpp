#pragma once

#include <stdexcept>
#include <string>

namespace nonmarkov {

/// Eigensolver failure, integrator step underflow, or any other breakdown of a
/// numerical kernel.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A dynamical map that should be inverted is (numerically) singular.
class SingularMapError : public NumericalError {
 public:
  SingularMapError(double time, double smallest_singular_value)
      : NumericalError("dynamical map is singular at t = " + std::to_string(time) +
                       " (smallest singular value " +
                       std::to_string(smallest_singular_value) + ")"),
        time_(time),
        singular_value_(smallest_singular_value) {}

  double time() const noexcept { return time_; }
  double singular_value() const noexcept { return singular_value_; }

 private:
  double time_;
  double singular_value_;
};

/// An operation was handed an object that does not satisfy its contract
/// (e.g. a non-trace-preserving map where a channel is required).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Model parameters describe a map that is not a valid dynamics.
class InvalidModel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace nonmarkov
