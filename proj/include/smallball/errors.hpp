#pragma once

#include <stdexcept>
#include <string>

namespace smallball {

// Invalid parameters or experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Grid / dimension mismatch between paths, models and intervals.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain (eps <= 0, s <= 0, shift not in the RKHS, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Query outside the range covered by an empirical curve.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Data that violates a structural requirement (non-monotone gauge, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Splitting ladder lost every particle at some level.
class LadderError : public std::runtime_error {
 public:
  LadderError(const std::string& what, int level) : std::runtime_error(what), level_(level) {}
  int level() const { return level_; }

 private:
  int level_;
};

// Precondition of a probe (e.g. the small-ball gate) is not satisfied.
class GateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical diagnostic failed (e.g. a profile that should be unimodal is not).
class DiagnosticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace smallball
