#include "ergavg/slope.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "ergavg/errors.hpp"

namespace ergavg {
namespace {

constexpr std::int64_t kMaxDenominator = std::int64_t{1} << 52;

struct Step {
  std::int64_t a;
  bool last;
};

// Iterates complete quotients x_k = (P_k + √D)/Q_k; for rational input it
// runs Euclid on num/den instead.
class QuotientStream {
 public:
  QuotientStream(const QuadraticSlope& s, bool rational, std::int64_t root) : d_(s.d), root_(root), rational_(rational) {
    if (rational) {
      num_ = s.p + root;
      den_ = s.q;
      if (den_ < 0) {
        num_ = -num_;
        den_ = -den_;
      }
    } else {
      p_ = s.p;
      q_ = s.q;
    }
  }

  Step next() {
    if (rational_) {
      const std::int64_t a = floor_div(num_, den_);
      const std::int64_t rem = num_ - a * den_;
      num_ = den_;
      den_ = rem;
      return {a, rem == 0};
    }
    const std::int64_t a = q_ > 0 ? floor_div(p_ + root_, q_) : floor_div(p_ + root_ + 1, q_);
    const std::int64_t p_next = a * q_ - p_;
    const std::int64_t q_next = (d_ - p_next * p_next) / q_;
    p_ = p_next;
    q_ = q_next;
    return {a, false};
  }

  // Current complete quotient, i.e. x_{k+1} after k+1 calls to next().
  long double complete_quotient() const {
    if (rational_) return static_cast<long double>(num_) / static_cast<long double>(den_);
    return (static_cast<long double>(p_) + std::sqrt(static_cast<long double>(d_))) / static_cast<long double>(q_);
  }

 private:
  std::int64_t d_;
  std::int64_t root_;
  bool rational_;
  std::int64_t p_ = 0;
  std::int64_t q_ = 1;
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace

std::int64_t isqrt(std::int64_t n) {
  if (n < 0) throw std::invalid_argument("isqrt of a negative number");
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

ContinuedFraction::ContinuedFraction(QuadraticSlope slope) : slope_(slope) {
  if (slope.q == 0) throw std::invalid_argument("quadratic slope: Q must be nonzero");
  if (slope.d < 0) throw std::invalid_argument("quadratic slope: D must be nonnegative");
  if (slope.d > (std::int64_t{1} << 40) || std::abs(slope.p) > (std::int64_t{1} << 20))
    throw std::invalid_argument("quadratic slope: coefficients too large for exact recurrence");
  root_ = isqrt(slope.d);
  rational_ = root_ * root_ == slope.d;
  if (!rational_ && (slope.d - slope.p * slope.p) % slope.q != 0)
    throw std::invalid_argument("quadratic slope: Q must divide D - P^2");
  value_ = (static_cast<long double>(slope.p) + std::sqrt(static_cast<long double>(slope.d))) /
           static_cast<long double>(slope.q);
}

std::vector<std::int64_t> ContinuedFraction::partial_quotients(std::size_t count) const {
  QuotientStream stream(slope_, rational_, root_);
  std::vector<std::int64_t> out;
  while (out.size() < count) {
    const Step s = stream.next();
    out.push_back(s.a);
    if (s.last) break;
  }
  return out;
}

std::vector<Convergent> ContinuedFraction::convergents(std::size_t count) const {
  QuotientStream stream(slope_, rational_, root_);
  std::vector<Convergent> out;
  std::int64_t p_prev = 1, q_prev = 0;
  std::int64_t p_cur = 0, q_cur = 1;
  for (std::size_t i = 0; i < count; ++i) {
    const Step s = stream.next();
    if (i > 0 && s.a > 0 && q_cur > (kMaxDenominator - q_prev) / s.a)
      throw PrecisionError("continued fraction: denominator would exceed 2^52 at index " + std::to_string(i));
    const std::int64_t p_next = i == 0 ? s.a : s.a * p_cur + p_prev;
    const std::int64_t q_next = i == 0 ? 1 : s.a * q_cur + q_prev;
    if (i == 0) {
      p_prev = 1;
      q_prev = 0;
    } else {
      p_prev = p_cur;
      q_prev = q_cur;
    }
    p_cur = p_next;
    q_cur = q_next;
    // q_i x − p_i = (−1)^i / (q_i x_{i+1} + q_{i−1})
    long double error = 0.0L;
    if (!s.last) {
      const long double x_next = stream.complete_quotient();
      const long double mag = 1.0L / (static_cast<long double>(q_cur) * x_next + static_cast<long double>(q_prev));
      error = (i % 2 == 0) ? mag : -mag;
    }
    out.push_back({p_cur, q_cur, error});
    if (s.last) break;
  }
  return out;
}

}  // namespace ergavg
