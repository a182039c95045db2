#include "ergavg/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ergavg/errors.hpp"
#include "ergavg/quadrature.hpp"
#include "ergavg/rng.hpp"

namespace ergavg {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Outer (per-x) work is split in small fixed blocks so that nested estimates
// still parallelize; the block size is part of the reproducibility contract.
constexpr std::size_t kOuterBlock = 16;

struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    if (n == 0.0) {
      *this = o;
      return;
    }
    const double total = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    n = total;
  }

  McEstimate estimate() const {
    McEstimate e;
    e.value = mean;
    e.samples = static_cast<std::size_t>(n);
    e.std_error = n > 1.0 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
    return e;
  }
};

// Runs fn(first, count, moments) over fixed blocks and merges in block order.
template <class Fn>
Moments blocked_moments(std::size_t n, std::size_t block, const ExecPolicy& exec, Fn&& fn) {
  const std::size_t blocks = block_count(n, block);
  std::vector<Moments> parts(blocks);
  for_each_block(blocks, exec, [&](std::size_t b) {
    const std::size_t first = b * block;
    fn(first, std::min(block, n - first), parts[b]);
  });
  Moments total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

void require_atomless(const WeightMeasure& nu) {
  if (!nu.is_atomless()) throw InvalidMeasure("averaging needs an atomless weight (point masses are rejected)");
}

void require_scale(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("scale t must be positive and finite");
}

void shifted_point(const TorusWinding& flow, const double* x, double s, double* out) {
  for (std::size_t k = 0; k < flow.dimension(); ++k) out[k] = frac(x[k] + frac(s * flow.alpha[k]));
}

void uniform_point(std::uint64_t key, std::size_t d, double* out) {
  CounterRng rng(key);
  for (std::size_t k = 0; k < d; ++k) out[k] = rng.uniform();
}

// Inner average of f(T_{rt}x) over r ~ ν for one point x.
struct InnerSums {
  double sum = 0.0;
  double sum_sq = 0.0;
};

InnerSums inner_sums(const TorusWinding& flow, const Observable& f, const WeightMeasure& nu, double t, const double* x,
                     std::size_t n_r, std::uint64_t seed, std::vector<double>& r, std::vector<double>& y) {
  r.resize(n_r);
  y.resize(flow.dimension());
  sample_range(nu, 0, r, seed);
  InnerSums s;
  for (double ri : r) {
    shifted_point(flow, x, ri * t, y.data());
    const double v = observable_value(f, y);
    s.sum += v;
    s.sum_sq += v * v;
  }
  return s;
}

std::vector<double> density_breaks(const Density& d) {
  return std::visit(Overloaded{
                        [](const Triangular& t) {
                          std::vector<double> b{t.lo};
                          if (t.mode > t.lo && t.mode < t.hi) b.push_back(t.mode);
                          b.push_back(t.hi);
                          return b;
                        },
                        [](const PiecewiseConstant& p) {
                          std::vector<double> b(p.masses.size() + 1);
                          for (std::size_t k = 0; k <= p.masses.size(); ++k) b[k] = p.lo + p.cell_width() * static_cast<double>(k);
                          b.back() = p.hi;
                          return b;
                        },
                        [](const auto& s) { return std::vector<double>{s.lo, s.hi}; },
                    },
                    d);
}

double max_frequency(const SpectralModel& sigma) {
  double w = 0.0;
  for (const auto& a : sigma.atoms) w = std::max(w, std::abs(a.frequency));
  if (sigma.ac) {
    const Interval sup = density_support(sigma.ac->density);
    w = std::max({w, std::abs(sup.lo), std::abs(sup.hi)});
  }
  return w;
}

// ∫ F(u) du over consecutive pieces with the 3-point Gauss rule, exact for
// polynomials of degree ≤ 5 on each piece.
template <class F>
double gauss3_over(const std::vector<double>& knots, F&& f) {
  static const double node = std::sqrt(0.6);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double a = knots[k];
    const double b = knots[k + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    total += half * (5.0 / 9.0 * f(mid - half * node) + 8.0 / 9.0 * f(mid) + 5.0 / 9.0 * f(mid + half * node));
  }
  return total;
}

void sort_unique(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

void add_mirrored(std::vector<double>& knots, double u, double reach) {
  if (u <= reach) {
    knots.push_back(u);
    knots.push_back(-u);
  }
}

// Breakpoints of u ↦ ρ(tu) on [−reach, reach] for piecewise-linear correlations.
std::vector<double> correlation_knots(const CorrelationModel& rho, double t, double reach) {
  std::vector<double> knots;
  std::visit(Overloaded{
                 [&](const SpikeProfile& p) {
                   knots.push_back(0.0);
                   add_mirrored(knots, p.core_half_width / t, reach);
                   for (const auto& s : p.spikes) {
                     if ((s.center - s.half_width) / t > reach) break;
                     add_mirrored(knots, (s.center - s.half_width) / t, reach);
                     add_mirrored(knots, s.center / t, reach);
                     add_mirrored(knots, (s.center + s.half_width) / t, reach);
                   }
                 },
                 [&](const ClosedFormCorrelation& c) {
                   for (std::size_t k = 0; k < c.flow.dimension(); ++k) {
                     const double alpha = c.flow.alpha[k];
                     if (alpha == 0.0) continue;
                     const double a = c.a.arcs[k];
                     const double b = c.b.arcs[k];
                     const double kinks[] = {0.0, a, frac(a - b), frac(1.0 - b), frac(1.0 - b + a)};
                     const double speed = t * alpha;
                     const double lo = std::min(-reach * speed, reach * speed);
                     const double hi = std::max(-reach * speed, reach * speed);
                     if (hi - lo > 4e6) throw AccuracyError("closed-form pair integral: too many kinks", hi - lo);
                     for (double kappa : kinks) {
                       for (double n = std::ceil(lo - kappa); n <= hi - kappa; n += 1.0) knots.push_back((n + kappa) / speed);
                     }
                   }
                 },
                 [](const BochnerCorrelation&) {},
             },
             rho);
  return knots;
}

double pair_integral_on(const CorrelationModel& rho, const DifferenceDensity& g, double t, double tol,
                        double& integration_error) {
  const double reach = g.reach();
  std::vector<double> knots;
  g.knots_in(-reach, reach, knots);
  if (const auto* bochner = std::get_if<BochnerCorrelation>(&rho)) {
    const double per_unit = t * max_frequency(bochner->sigma) / (2.0 * std::numbers::pi) / 8.0;
    auto f = [&](double u) { return correlation_from_spectrum(bochner->sigma, t * u).real() * g.pdf(u); };
    auto est = quad::gauss_over_pieces(f, knots, per_unit, tol);
    if (!est.converged) throw AccuracyError("pair integral quadrature did not converge", est.error);
    integration_error = est.error;
    return est.value;
  }
  const auto extra = correlation_knots(rho, t, reach);
  knots.insert(knots.end(), extra.begin(), extra.end());
  sort_unique(knots);
  integration_error = 0.0;
  if (const auto* spikes = std::get_if<SpikeProfile>(&rho)) {
    const double c = spikes->baseline;
    return c + gauss3_over(knots, [&](double u) { return (evaluate_correlation(rho, t * u) - c) * g.pdf(u); });
  }
  return gauss3_over(knots, [&](double u) { return evaluate_correlation(rho, t * u) * g.pdf(u); });
}

std::vector<double> sample_differences(const WeightMeasure& nu, std::size_t n, std::uint64_t seed,
                                       const ExecPolicy& exec) {
  std::vector<double> diff(n);
  const std::uint64_t seed_r = derive_seed(seed, 0);
  const std::uint64_t seed_s = derive_seed(seed, 1);
  for_each_block(block_count(n), exec, [&](std::size_t b) {
    const std::size_t first = b * kMonteCarloBlock;
    const std::size_t count = std::min(kMonteCarloBlock, n - first);
    std::span<double> r(diff.data() + first, count);
    std::vector<double> s(count);
    sample_range(nu, first, r, seed_r);
    sample_range(nu, first, s, seed_s);
    for (std::size_t j = 0; j < count; ++j) r[j] -= s[j];
  });
  return diff;
}

}  // namespace

// ------------------------------------------------------------------ averages

McEstimate weighted_average_pointwise(const TorusWinding& flow, const Observable& f, const WeightMeasure& nu, double t,
                                      const TorusPoint& x, std::size_t n_r, std::uint64_t seed,
                                      const ExecPolicy& exec) {
  require_atomless(nu);
  require_scale(t);
  if (x.size() != flow.dimension()) throw std::invalid_argument("weighted average: point dimension mismatch");
  if (n_r == 0) throw std::invalid_argument("weighted average: need at least one sample");
  if (const auto* c = std::get_if<ConstantObservable>(&f)) return {c->value, 0.0, n_r};
  const Moments m = blocked_moments(n_r, kMonteCarloBlock, exec, [&](std::size_t first, std::size_t count, Moments& out) {
    std::vector<double> r(count);
    std::vector<double> y(flow.dimension());
    sample_range(nu, first, r, seed);
    for (double ri : r) {
      shifted_point(flow, x.data(), ri * t, y.data());
      out.add(observable_value(f, y));
    }
  });
  return m.estimate();
}

L1Deviation l1_deviation(const TorusWinding& flow, const Observable& f, const WeightMeasure& nu, double t,
                         std::size_t n_x, std::size_t n_r, std::uint64_t seed, const ExecPolicy& exec) {
  require_atomless(nu);
  require_scale(t);
  if (n_x == 0 || n_r == 0) throw std::invalid_argument("l1_deviation: sample counts must be positive");
  L1Deviation out;
  out.n_x = n_x;
  out.n_r = n_r;
  if (std::holds_alternative<ConstantObservable>(f)) return out;
  const double mean = observable_mean(f);
  const std::uint64_t seed_x = derive_seed(seed, 0);
  const std::uint64_t seed_r = derive_seed(seed, 1);
  const std::size_t d = flow.dimension();
  const Moments m = blocked_moments(n_x, kOuterBlock, exec, [&](std::size_t first, std::size_t count, Moments& acc) {
    std::vector<double> x(d), r, y;
    for (std::size_t i = first; i < first + count; ++i) {
      uniform_point(derive_seed(seed_x, i), d, x.data());
      const InnerSums s = inner_sums(flow, f, nu, t, x.data(), n_r, derive_seed(seed_r, i), r, y);
      acc.add(std::abs(s.sum / static_cast<double>(n_r) - mean));
    }
  });
  const McEstimate e = m.estimate();
  out.value = e.value;
  out.std_error = e.std_error;
  out.bias_bound = observable_sup(f) / std::sqrt(static_cast<double>(n_r));
  return out;
}

McEstimate l2_deviation_squared(const TorusWinding& flow, const Observable& f, const WeightMeasure& nu, double t,
                                std::size_t n_x, std::size_t n_r, std::uint64_t seed, const ExecPolicy& exec) {
  require_atomless(nu);
  require_scale(t);
  if (n_x == 0 || n_r < 2) throw std::invalid_argument("l2_deviation_squared: need n_x ≥ 1 and n_r ≥ 2");
  if (std::holds_alternative<ConstantObservable>(f)) return {0.0, 0.0, n_x};
  const double mean = observable_mean(f);
  const std::uint64_t seed_x = derive_seed(seed, 0);
  const std::uint64_t seed_r = derive_seed(seed, 1);
  const std::size_t d = flow.dimension();
  const double nr = static_cast<double>(n_r);
  const Moments m = blocked_moments(n_x, kOuterBlock, exec, [&](std::size_t first, std::size_t count, Moments& acc) {
    std::vector<double> x(d), r, y;
    for (std::size_t i = first; i < first + count; ++i) {
      uniform_point(derive_seed(seed_x, i), d, x.data());
      const InnerSums s = inner_sums(flow, f, nu, t, x.data(), n_r, derive_seed(seed_r, i), r, y);
      // Σ_{j≠k} (f_j − m)(f_k − m) / (n(n−1)) is unbiased for (P_t f(x) − m)².
      const double centered = s.sum - nr * mean;
      const double centered_sq = s.sum_sq - 2.0 * mean * s.sum + nr * mean * mean;
      acc.add((centered * centered - centered_sq) / (nr * (nr - 1.0)));
    }
  });
  return m.estimate();
}

double l2_norm_spectral(const SpectralModel& sigma, const WeightMeasure& nu, double t) {
  require_scale(t);
  double total = 0.0;
  for (const auto& a : sigma.atoms) total += a.mass * std::norm(char_fn(nu, t * a.frequency));
  if (sigma.ac) {
    const Density& shape = sigma.ac->density;
    const auto breaks = density_breaks(shape);
    const double per_unit = t * std::max(nu.support().width(), 1e-300) / (2.0 * std::numbers::pi) / 8.0;
    auto f = [&](double w) { return std::norm(char_fn(nu, t * w)) * density_pdf(shape, w); };
    auto est = quad::gauss_over_pieces(f, breaks, per_unit, 1e-10);
    if (!est.converged) throw AccuracyError("l2_norm_spectral quadrature did not converge", est.error);
    total += sigma.ac->mass * est.value;
  }
  return std::sqrt(std::max(0.0, total));
}

// ------------------------------------------------------- difference density

DifferenceDensity::DifferenceDensity(const PiecewiseConstant& cells) : h_(cells.cell_width()) {
  const std::size_t k_cells = cells.masses.size();
  coef_.assign(2 * k_cells - 1, 0.0);
  for (std::size_t i = 0; i < k_cells; ++i) {
    if (cells.masses[i] == 0.0) continue;
    for (std::size_t j = 0; j < k_cells; ++j) coef_[i + (k_cells - 1) - j] += cells.masses[i] * cells.masses[j];
  }
}

double DifferenceDensity::pdf(double u) const {
  const double v = u / h_;
  const double k0 = std::floor(v);
  const double f = v - k0;
  const auto half = static_cast<std::int64_t>(coef_.size() / 2);
  auto c = [&](double k) {
    const auto idx = static_cast<std::int64_t>(k) + half;
    return (idx < 0 || idx >= static_cast<std::int64_t>(coef_.size())) ? 0.0 : coef_[static_cast<std::size_t>(idx)];
  };
  if (std::abs(k0) > static_cast<double>(half) + 2.0) return 0.0;
  return (c(k0) * (1.0 - f) + c(k0 + 1.0) * f) / h_;
}

double DifferenceDensity::cdf(double u) const {
  const double v = u / h_;
  const auto half = static_cast<std::int64_t>(coef_.size() / 2);
  if (v <= -static_cast<double>(half) - 1.0) return 0.0;
  if (v >= static_cast<double>(half) + 1.0) return 1.0;
  const double k0 = std::floor(v);
  const double f = v - k0;
  const auto i0 = static_cast<std::int64_t>(k0) + half;
  double total = 0.0;
  for (std::int64_t i = 0; i < std::min<std::int64_t>(i0, static_cast<std::int64_t>(coef_.size())); ++i) total += coef_[i];
  auto c = [&](std::int64_t idx) {
    return (idx < 0 || idx >= static_cast<std::int64_t>(coef_.size())) ? 0.0 : coef_[static_cast<std::size_t>(idx)];
  };
  total += c(i0) * (1.0 - 0.5 * (1.0 - f) * (1.0 - f)) + c(i0 + 1) * 0.5 * f * f;
  return std::clamp(total, 0.0, 1.0);
}

void DifferenceDensity::knots_in(double lo, double hi, std::vector<double>& out) const {
  const auto half = static_cast<double>(coef_.size() / 2 + 1);
  const double k_lo = std::max(std::ceil(lo / h_), -half);
  const double k_hi = std::min(std::floor(hi / h_), half);
  for (double k = k_lo; k <= k_hi; k += 1.0) out.push_back(k * h_);
}

bool has_difference_density(const WeightMeasure& nu) {
  return std::visit(Overloaded{
                        [](const Density&) { return true; },
                        [](const Scaled& s) { return has_difference_density(s.inner); },
                        [](const auto&) { return false; },
                    },
                    nu.node().value);
}

bool difference_density_is_exact(const WeightMeasure& nu) {
  return std::visit(Overloaded{
                        [](const Density& d) {
                          return std::holds_alternative<Uniform>(d) || std::holds_alternative<PiecewiseConstant>(d);
                        },
                        [](const Scaled& s) { return difference_density_is_exact(s.inner); },
                        [](const auto&) { return false; },
                    },
                    nu.node().value);
}

DifferenceDensity difference_density(const WeightMeasure& nu, std::size_t cells) {
  if (!has_difference_density(nu)) throw InvalidMeasure("difference density needs a density weight");
  return DifferenceDensity(piecewise_approximation(nu, cells));
}

// ---------------------------------------------------------- pair integrals

PairIntegral correlation_pair_integral_sampled(const CorrelationModel& rho, const WeightMeasure& nu, double t,
                                               std::size_t samples, std::uint64_t seed, const ExecPolicy& exec) {
  require_atomless(nu);
  require_scale(t);
  if (samples < 2) throw std::invalid_argument("pair integral: need at least two samples");
  const auto diff = sample_differences(nu, samples, seed, exec);
  const Moments m = blocked_moments(samples, kMonteCarloBlock, exec, [&](std::size_t first, std::size_t count, Moments& acc) {
    for (std::size_t j = first; j < first + count; ++j) acc.add(evaluate_correlation(rho, t * diff[j]));
  });
  const McEstimate e = m.estimate();
  return {e.value, e.std_error};
}

PairIntegral correlation_pair_integral_quadrature(const CorrelationModel& rho, const WeightMeasure& nu, double t,
                                                  const QuadratureSpec& spec) {
  require_scale(t);
  if (!has_difference_density(nu)) throw InvalidMeasure("pair integral quadrature needs a density weight");
  if (spec.grid_cells < 2) throw std::invalid_argument("pair integral: grid needs at least two cells");
  double fine_error = 0.0;
  const double fine = pair_integral_on(rho, difference_density(nu, spec.grid_cells), t, spec.tolerance, fine_error);
  if (difference_density_is_exact(nu)) return {fine, fine_error};
  double coarse_error = 0.0;
  const double coarse = pair_integral_on(rho, difference_density(nu, spec.grid_cells / 2), t, spec.tolerance, coarse_error);
  return {fine, std::abs(fine - coarse) + fine_error};
}

PairIntegral correlation_pair_integral(const CorrelationModel& rho, const WeightMeasure& nu, double t,
                                       const QuadratureSpec& spec, std::size_t samples, std::uint64_t seed,
                                       const ExecPolicy& exec) {
  require_atomless(nu);
  if (has_difference_density(nu)) return correlation_pair_integral_quadrature(rho, nu, t, spec);
  return correlation_pair_integral_sampled(rho, nu, t, samples, seed, exec);
}

// ------------------------------------------------------------ descent check

DescentReport holder_descent_check(const SpectralModel& sigma, const std::function<double(double)>& magnitude, int n,
                                   double oscillation) {
  if (n < 2) throw std::invalid_argument("holder_descent_check: n must be at least 2");
  double second = 0.0;
  double high = 0.0;
  for (const auto& a : sigma.atoms) {
    const double m = magnitude(a.frequency);
    second += a.mass * m * m;
    high += a.mass * std::pow(m, 2.0 * n);
  }
  if (sigma.ac) {
    const Density& shape = sigma.ac->density;
    const auto breaks = density_breaks(shape);
    const double per_unit = std::max(oscillation, 0.0) / 8.0;
    auto both = [&](double w) {
      const double m = magnitude(w);
      const double p = density_pdf(shape, w);
      return std::complex<double>(m * m * p, std::pow(m, 2.0 * n) * p);
    };
    auto est = quad::gauss_over_pieces(both, breaks, per_unit, 1e-12);
    if (!est.converged) throw AccuracyError("holder_descent_check quadrature did not converge", est.error);
    second += sigma.ac->mass * est.value.real();
    high += sigma.ac->mass * est.value.imag();
  }
  DescentReport r;
  r.lhs = second;
  r.rhs = std::pow(std::max(0.0, high), 1.0 / n);
  r.pass = r.lhs <= r.rhs + 1e-9;
  return r;
}

DescentReport holder_descent_check(const SpectralModel& sigma, const WeightMeasure& nu, double t, int n) {
  require_scale(t);
  const double oscillation = t * nu.support().width() / (2.0 * std::numbers::pi);
  return holder_descent_check(
      sigma, [&](double w) { return std::min(1.0, std::abs(char_fn(nu, t * w))); }, n, oscillation);
}

// ------------------------------------------------------------------- scans

DecayCurve convergence_scan(const Evaluator& evaluator, const std::vector<double>& grid, std::uint64_t seed) {
  if (grid.size() < 2) throw std::invalid_argument("scan grid needs at least two points");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw std::invalid_argument("scan grid must be strictly increasing");
  DecayCurve curve;
  curve.grid = grid;
  curve.values.resize(grid.size());
  curve.errors.resize(grid.size());
  curve.failed.assign(grid.size(), false);
  curve.extras.assign(grid.size(), nlohmann::json::object());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    try {
      PointResult p = evaluator(grid[k], derive_seed(seed, k));
      curve.values[k] = p.value;
      curve.errors[k] = std::max(0.0, p.error);
      curve.extras[k] = std::move(p.extras);
    } catch (const std::exception& e) {
      curve.values[k] = std::nan("");
      curve.errors[k] = std::nan("");
      curve.failed[k] = true;
      curve.extras[k] = {{"error", e.what()}};
    }
  }
  curve.metadata["seed"] = seed;
  return curve;
}

DecayCurve almost_mixing_probe(const SpikeProfile& rho, const WeightMeasure& nu, const std::vector<double>& grid,
                               const ProbeOptions& options) {
  require_atomless(nu);
  const bool exact_masses = has_difference_density(nu);
  std::optional<DifferenceDensity> g;
  if (exact_masses) g.emplace(difference_density(nu, options.quadrature.grid_cells));
  const CorrelationModel model = rho;
  auto evaluator = [&](double t, std::uint64_t seed) {
    const PairIntegral pair =
        correlation_pair_integral(model, nu, t, options.quadrature, options.samples, seed, options.exec);
    PointResult out;
    out.value = std::abs(pair.value - rho.baseline);
    out.error = pair.error;
    // ν×ν mass of {t(r−s) ∈ [lo, hi]}
    std::vector<double> diff;
    if (!exact_masses) diff = sample_differences(nu, options.samples, seed, options.exec);
    auto mass_between = [&](double lo, double hi) {
      if (g) return std::max(0.0, g->cdf(hi / t) - g->cdf(lo / t));
      const auto hits = std::count_if(diff.begin(), diff.end(), [&](double u) { return t * u >= lo && t * u <= hi; });
      return static_cast<double>(hits) / static_cast<double>(diff.size());
    };
    const double reach = g ? g->reach() : 2.0 * std::max(std::abs(nu.support().lo), std::abs(nu.support().hi));
    out.extras["band_mass"] = mass_between(-options.band, options.band);
    nlohmann::json spikes = nlohmann::json::array();
    double captured = 0.0;
    std::size_t hit = 0;
    for (std::size_t j = 0; j < rho.spikes.size(); ++j) {
      const Spike& s = rho.spikes[j];
      if (s.center - s.half_width > t * reach) break;
      const double m = mass_between(s.center - s.half_width, s.center + s.half_width) +
                       mass_between(-s.center - s.half_width, -s.center + s.half_width);
      if (m <= 0.0) continue;
      captured += m;
      ++hit;
      if (spikes.size() < 32) spikes.push_back({{"j", j + 1}, {"center", s.center}, {"mass", m}});
    }
    out.extras["spike_mass"] = std::move(spikes);
    out.extras["spikes_hit"] = hit;
    out.extras["spike_mass_total"] = captured;
    return out;
  };
  DecayCurve curve = convergence_scan(evaluator, grid, options.seed);
  curve.metadata["baseline"] = rho.baseline;
  curve.metadata["band"] = options.band;
  curve.metadata["method"] = exact_masses ? "quadrature" : "sampling";
  return curve;
}

}  // namespace ergavg
