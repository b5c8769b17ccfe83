#pragma once

#include <stdexcept>
#include <string>

namespace refrac {

// Argument outside the mathematical domain of an operation (negative age, t <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or inconsistent arguments (bad grid, zero rate where one is required, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Evaluation outside the span of tabulated data.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Input data violating a model invariant (e.g. an initial history that is not normalized).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Singular or ill-conditioned systems, non-converging iterations, broken symmetry.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A renewal process that has no dead-time representation at the requested input rate.
class NotRepresentableError : public std::runtime_error {
 public:
  NotRepresentableError(const std::string& what, double where)
      : std::runtime_error(what), where_(where) {}

  // Location x of the first violation of the positivity condition.
  double where() const noexcept { return where_; }

 private:
  double where_;
};

}  // namespace refrac
