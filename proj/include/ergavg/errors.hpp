#pragma once

#include <stdexcept>
#include <string>

namespace ergavg {

/// A measure that violates its well-formedness contract (mass, support,
/// parameter ranges) or an atomic measure passed where atomless is required.
class InvalidMeasure : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not reach its target accuracy.
class AccuracyError : public std::runtime_error {
 public:
  AccuracyError(const std::string& what, double achieved_bound)
      : std::runtime_error(what + " (achieved bound " + std::to_string(achieved_bound) + ")"),
        achieved_bound_(achieved_bound) {}

  double achieved_bound() const noexcept { return achieved_bound_; }

 private:
  double achieved_bound_;
};

/// Integer or floating-point range needed by an exact computation is exhausted.
class PrecisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An adversary level cannot be built at the requested rigidity index.
class InfeasibleLevel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reading or writing an experiment file failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ergavg
