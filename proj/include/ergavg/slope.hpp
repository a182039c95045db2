#pragma once

#include <cstdint>
#include <vector>

namespace ergavg {

/// Real number (P + √D) / Q with integer P, D ≥ 0, Q ≠ 0 and Q | (D − P²).
/// A perfect-square D makes the number rational.
struct QuadraticSlope {
  std::int64_t p = 0;
  std::int64_t d = 0;
  std::int64_t q = 1;
};

/// Convergent p/q of a continued fraction and the signed error q·x − p.
struct Convergent {
  std::int64_t p = 0;
  std::int64_t q = 1;
  long double error = 0.0L;
};

/// Exact continued-fraction expansion using the integer recurrence for
/// quadratic surds; no floating-point partial quotients.
class ContinuedFraction {
 public:
  explicit ContinuedFraction(QuadraticSlope slope);

  long double value() const { return value_; }
  bool is_rational() const { return rational_; }

  /// Convergents with index 0..count-1 (index 0 is a_0/1). Stops early when a
  /// rational expansion terminates. Throws PrecisionError once a denominator
  /// would reach 2^52.
  std::vector<Convergent> convergents(std::size_t count) const;
  /// Partial quotients a_0, a_1, ...
  std::vector<std::int64_t> partial_quotients(std::size_t count) const;

 private:
  QuadraticSlope slope_;
  bool rational_ = false;
  std::int64_t root_ = 0;  // ⌊√D⌋
  long double value_ = 0.0L;
};

std::int64_t isqrt(std::int64_t n);
std::int64_t floor_div(std::int64_t a, std::int64_t b);

}  // namespace ergavg
