#include "ergavg/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <queue>
#include <string>

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

constexpr double kMassTolerance = 1e-9;
constexpr double kSelfSimilarWeightTolerance = 1e-12;
constexpr double kCharFnTolerance = 1e-10;
constexpr double kSampleDiameter = 1e-12;
constexpr double kTailTolerance = 1e-6;
constexpr std::size_t kInverseCdfCells = std::size_t{1} << 14;

double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

CharFnValue uniform_char_fn(double lo, double hi, double xi) {
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  return std::polar(sinc(xi * half), xi * mid);
}

// (sin θ/θ − cos θ)/θ, so that ∫_{−1}^{1} s e^{iθs} ds = 2i·j1(θ).
double spherical_j1(double theta) {
  if (std::abs(theta) < 0.1) {
    const double t2 = theta * theta;
    return theta * (1.0 / 3.0 - t2 * (1.0 / 30.0 - t2 * (1.0 / 840.0 - t2 * (1.0 / 45360.0 - t2 / 3991680.0))));
  }
  return (std::sin(theta) / theta - std::cos(theta)) / theta;
}

// ∫_a^b f(x) e^{iξx} dx for f linear with f(a) = fa, f(b) = fb.
CharFnValue linear_piece_char_fn(double a, double b, double fa, double fb, double xi) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double theta = xi * half;
  const CharFnValue inner{(fa + fb) * sinc(theta), (fb - fa) * spherical_j1(theta)};
  return half * std::polar(1.0, xi * mid) * inner;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double gaussian_normalizer(const TruncatedGaussian& g) {
  return normal_cdf((g.hi - g.mean) / g.sd) - normal_cdf((g.lo - g.mean) / g.sd);
}

// ---------------------------------------------------------------- validation

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidMeasure(what);
}

bool finite(double x) { return std::isfinite(x); }

void validate_density(const Density& d) {
  std::visit(Overloaded{
                 [](const Uniform& u) {
                   require(finite(u.lo) && finite(u.hi) && u.lo < u.hi, "uniform: need lo < hi");
                 },
                 [](const Triangular& t) {
                   require(finite(t.lo) && finite(t.hi) && t.lo < t.hi && t.lo <= t.mode && t.mode <= t.hi,
                           "triangular: need lo <= mode <= hi and lo < hi");
                 },
                 [](const TruncatedGaussian& g) {
                   require(finite(g.mean) && finite(g.sd) && g.sd > 0.0, "gaussian: need sd > 0");
                   require(finite(g.lo) && finite(g.hi) && g.lo < g.hi, "gaussian: need lo < hi");
                   require(gaussian_normalizer(g) > 1e-300, "gaussian: truncation window carries no mass");
                 },
                 [](const PiecewiseConstant& p) {
                   require(finite(p.lo) && finite(p.hi) && p.lo < p.hi, "piecewise: need lo < hi");
                   require(!p.masses.empty(), "piecewise: need at least one cell");
                   double total = 0.0;
                   for (double m : p.masses) {
                     require(finite(m) && m >= 0.0, "piecewise: negative or non-finite cell mass");
                     total += m;
                   }
                   require(std::abs(total - 1.0) <= kMassTolerance,
                           "piecewise: cell masses sum to " + std::to_string(total) + ", not 1");
                 },
             },
             d);
}

void validate_self_similar(const SelfSimilar& s) {
  require(!s.ratios.empty(), "self-similar: need at least one map");
  require(s.ratios.size() == s.shifts.size() && s.ratios.size() == s.weights.size(),
          "self-similar: ratios, shifts and weights differ in length");
  double total = 0.0;
  for (std::size_t k = 0; k < s.ratios.size(); ++k) {
    require(finite(s.ratios[k]) && s.ratios[k] > 0.0 && s.ratios[k] < 1.0, "self-similar: ratio outside (0,1)");
    require(finite(s.shifts[k]), "self-similar: non-finite shift");
    require(finite(s.weights[k]) && s.weights[k] > 0.0, "self-similar: weights must be positive");
    total += s.weights[k];
  }
  require(std::abs(total - 1.0) <= kSelfSimilarWeightTolerance,
          "self-similar: weights sum to " + std::to_string(total) + ", not 1");
  // Maps sharing one fixed point generate a point mass.
  const double fixed0 = s.shifts[0] / (1.0 - s.ratios[0]);
  bool distinct = false;
  for (std::size_t k = 1; k < s.ratios.size(); ++k)
    distinct = distinct || std::abs(s.shifts[k] / (1.0 - s.ratios[k]) - fixed0) > 1e-12 * (1.0 + std::abs(fixed0));
  require(distinct, "self-similar: all maps share a fixed point (atomic measure)");
}

void validate_nested(const NestedIntervals& t) {
  require(finite(t.root_center) && finite(t.root_half_width) && t.root_half_width > 0.0,
          "nested: root half-width must be positive");
  require(t.root_center - t.root_half_width >= -1e-15 && t.root_center + t.root_half_width <= 1.0 + 1e-15,
          "nested: root interval must lie in [0,1]");
  std::vector<double> parent_half{t.root_half_width};
  for (std::size_t n = 0; n < t.levels.size(); ++n) {
    const auto& level = t.levels[n];
    require(level.size() == (std::size_t{1} << (n + 1)),
            "nested: level " + std::to_string(n + 1) + " must have 2^" + std::to_string(n + 1) + " nodes");
    std::vector<double> halves(level.size());
    for (std::size_t k = 0; k < level.size(); ++k) {
      const NestedNode& node = level[k];
      require(finite(node.offset) && finite(node.half_width) && node.half_width > 0.0,
              "nested: node half-width must be positive");
      const double ph = parent_half[k / 2];
      require(std::abs(node.offset) + node.half_width <= ph * (1.0 + 1e-9),
              "nested: node " + std::to_string(k) + " of level " + std::to_string(n + 1) + " leaves its parent");
      halves[k] = node.half_width;
    }
    for (std::size_t k = 0; k + 1 < level.size(); k += 2) {
      require(level[k].offset + level[k].half_width < level[k + 1].offset - level[k + 1].half_width,
              "nested: siblings at level " + std::to_string(n + 1) + " overlap or are out of order");
    }
    parent_half = std::move(halves);
  }
}

// ------------------------------------------------------------- self-similar

bool equal_ratios(const SelfSimilar& s) {
  return std::all_of(s.ratios.begin(), s.ratios.end(), [&](double r) { return r == s.ratios.front(); });
}

double self_similar_second_moment(const SelfSimilar& s) {
  const double mu = self_similar_mean(s);
  double num = 0.0;
  double den = 1.0;
  for (std::size_t k = 0; k < s.ratios.size(); ++k) {
    num += s.weights[k] * (s.shifts[k] * s.shifts[k] + 2.0 * s.shifts[k] * s.ratios[k] * mu);
    den -= s.weights[k] * s.ratios[k] * s.ratios[k];
  }
  return num / den;
}

struct SelfSimilarStats {
  double mean;
  double variance;
  double diameter;
};

CharFnValue self_similar_recursive(const SelfSimilar& s, const SelfSimilarStats& st, double xi,
                                   std::size_t& budget) {
  const double eta = std::abs(xi) * st.diameter;
  if (eta * eta * eta / 6.0 < 1e-11) {
    return std::polar(1.0, xi * st.mean) * (1.0 - 0.5 * xi * xi * st.variance);
  }
  if (budget == 0) throw AccuracyError("self-similar char fn: recursion budget exhausted", eta);
  --budget;
  CharFnValue sum{0.0, 0.0};
  for (std::size_t k = 0; k < s.ratios.size(); ++k)
    sum += s.weights[k] * std::polar(1.0, xi * s.shifts[k]) * self_similar_recursive(s, st, s.ratios[k] * xi, budget);
  return sum;
}

CharFnValue self_similar_char_fn(const SelfSimilar& s, double xi) {
  if (xi == 0.0) return {1.0, 0.0};
  const Interval hull = self_similar_hull(s);
  const double diameter = hull.width();
  const double mu = self_similar_mean(s);
  if (equal_ratios(s)) {
    // ν̂(ξ) = Π_{m<K} Σ_k p_k e^{iξ r^m c_k} · ν̂(r^K ξ); the tail factor is
    // replaced by e^{i r^K ξ μ}, off by at most r^K |ξ| diam.
    const double r = s.ratios.front();
    CharFnValue product{1.0, 0.0};
    double eta = xi;
    while (std::abs(eta) * diameter >= kCharFnTolerance) {
      CharFnValue factor{0.0, 0.0};
      for (std::size_t k = 0; k < s.shifts.size(); ++k) factor += s.weights[k] * std::polar(1.0, eta * s.shifts[k]);
      product *= factor;
      eta *= r;
    }
    return product * std::polar(1.0, eta * mu);
  }
  const double second = self_similar_second_moment(s);
  SelfSimilarStats st{mu, std::max(0.0, second - mu * mu), diameter};
  std::size_t budget = 20'000'000;
  return self_similar_recursive(s, st, xi, budget);
}

double self_similar_tail(const SelfSimilar& s, double n) {
  const Interval hull = self_similar_hull(s);
  struct Cylinder {
    double weight;
    double offset;
    double factor;
    bool operator<(const Cylinder& o) const { return weight < o.weight; }
  };
  std::priority_queue<Cylinder> open;
  open.push({1.0, 0.0, 1.0});
  double outside = 0.0;
  double straddling = 1.0;
  std::size_t processed = 0;
  while (!open.empty() && straddling > 0.1 * kTailTolerance) {
    if (++processed > 4'000'000) throw AccuracyError("self-similar tail mass: cylinder budget exhausted", straddling);
    const Cylinder c = open.top();
    open.pop();
    straddling -= c.weight;
    const double lo = c.offset + c.factor * hull.lo;
    const double hi = c.offset + c.factor * hull.hi;
    if (lo >= -n && hi <= n) continue;
    if (hi < -n || lo > n) {
      outside += c.weight;
      continue;
    }
    for (std::size_t k = 0; k < s.ratios.size(); ++k) {
      open.push({c.weight * s.weights[k], c.offset + c.factor * s.shifts[k], c.factor * s.ratios[k]});
      straddling += c.weight * s.weights[k];
    }
  }
  return std::clamp(outside + 0.5 * std::max(0.0, straddling), 0.0, 1.0);
}

// ----------------------------------------------------------------- densities

CharFnValue density_char_fn(const Density& d, double xi) {
  if (xi == 0.0) return {1.0, 0.0};
  return std::visit(
      Overloaded{
          [&](const Uniform& u) { return uniform_char_fn(u.lo, u.hi, xi); },
          [&](const PiecewiseConstant& p) {
            CharFnValue sum{0.0, 0.0};
            const double h = p.cell_width();
            for (std::size_t k = 0; k < p.masses.size(); ++k) {
              if (p.masses[k] == 0.0) continue;
              const double lo = p.lo + h * static_cast<double>(k);
              sum += p.masses[k] * uniform_char_fn(lo, lo + h, xi);
            }
            return sum;
          },
          [&](const Triangular& t) {
            const double peak = 2.0 / (t.hi - t.lo);
            CharFnValue sum{0.0, 0.0};
            if (t.mode > t.lo) sum += linear_piece_char_fn(t.lo, t.mode, 0.0, peak, xi);
            if (t.mode < t.hi) sum += linear_piece_char_fn(t.mode, t.hi, peak, 0.0, xi);
            return sum;
          },
          [&](const TruncatedGaussian& g) {
            const std::vector<double> breaks{g.lo, g.hi};
            const Density shape = g;
            auto integrand = [&](double x) { return density_pdf(shape, x) * std::polar(1.0, xi * x); };
            const double cells_per_unit = std::abs(xi) / (2.0 * std::numbers::pi) / 8.0;
            auto est = quad::gauss_over_pieces(integrand, breaks, cells_per_unit, kCharFnTolerance);
            if (!est.converged) throw AccuracyError("char_fn quadrature did not converge", est.error);
            return est.value;
          },
      },
      d);
}

std::vector<double> cdf_table(const Density& d, std::size_t cells) {
  const Interval sup = density_support(d);
  std::vector<double> table(cells + 1);
  for (std::size_t k = 0; k <= cells; ++k) table[k] = density_cdf(d, sup.lo + sup.width() * k / cells);
  table.front() = 0.0;
  table.back() = 1.0;
  return table;
}

double inverse_from_table(const std::vector<double>& table, const Interval& sup, double u) {
  const std::size_t cells = table.size() - 1;
  auto it = std::upper_bound(table.begin(), table.end(), u);
  std::size_t k = static_cast<std::size_t>(std::distance(table.begin(), it));
  k = std::clamp<std::size_t>(k, 1, cells) - 1;
  const double f0 = table[k];
  const double f1 = table[k + 1];
  const double frac = f1 > f0 ? (u - f0) / (f1 - f0) : 0.5;
  const double h = sup.width() / static_cast<double>(cells);
  return sup.lo + h * (static_cast<double>(k) + std::clamp(frac, 0.0, 1.0));
}

void sample_density(const Density& d, std::uint64_t first, std::span<double> out, std::uint64_t seed) {
  auto uniform_at = [&](std::size_t j) { return CounterRng(derive_seed(seed, first + j)).uniform_open(); };
  std::visit(Overloaded{
                 [&](const Uniform& u) {
                   for (std::size_t j = 0; j < out.size(); ++j) out[j] = u.lo + (u.hi - u.lo) * uniform_at(j);
                 },
                 [&](const Triangular& t) {
                   const double width = t.hi - t.lo;
                   const double split = (t.mode - t.lo) / width;
                   for (std::size_t j = 0; j < out.size(); ++j) {
                     const double u = uniform_at(j);
                     out[j] = u < split ? t.lo + std::sqrt(u * width * (t.mode - t.lo))
                                        : t.hi - std::sqrt((1.0 - u) * width * (t.hi - t.mode));
                   }
                 },
                 [&](const TruncatedGaussian& g) {
                   const auto table = cdf_table(g, kInverseCdfCells);
                   const Interval sup{g.lo, g.hi};
                   for (std::size_t j = 0; j < out.size(); ++j) out[j] = inverse_from_table(table, sup, uniform_at(j));
                 },
                 [&](const PiecewiseConstant& p) {
                   std::vector<double> table(p.masses.size() + 1, 0.0);
                   std::partial_sum(p.masses.begin(), p.masses.end(), table.begin() + 1);
                   for (double& v : table) v /= table.back();
                   const Interval sup{p.lo, p.hi};
                   for (std::size_t j = 0; j < out.size(); ++j) out[j] = inverse_from_table(table, sup, uniform_at(j));
                 },
             },
             d);
}

// ------------------------------------------------------------------ nested

CharFnValue nested_char_fn(const NestedIntervals& t, double xi) {
  if (xi == 0.0) return {1.0, 0.0};
  const std::size_t depth = t.depth();
  const double leaf_half = depth == 0 ? t.root_half_width : 0.0;
  std::vector<CharFnValue> values;
  if (depth == 0) {
    values.push_back(sinc(xi * leaf_half));
  } else {
    // Bottom-up: value of a node relative to its own center.
    const auto& leaves = t.levels.back();
    values.resize(leaves.size());
    for (std::size_t k = 0; k < leaves.size(); ++k) values[k] = sinc(xi * leaves[k].half_width);
    for (std::size_t n = depth; n-- > 0;) {
      const auto& level = t.levels[n];
      std::vector<CharFnValue> parents(level.size() / 2);
      for (std::size_t k = 0; k < parents.size(); ++k) {
        parents[k] = 0.5 * (std::polar(1.0, xi * level[2 * k].offset) * values[2 * k] +
                            std::polar(1.0, xi * level[2 * k + 1].offset) * values[2 * k + 1]);
      }
      values = std::move(parents);
    }
  }
  return std::polar(1.0, xi * t.root_center) * values.front();
}

double nested_cdf(const NestedIntervals& t, double x) {
  const std::size_t depth = t.depth();
  const std::size_t leaves = std::size_t{1} << depth;
  const double mass = 1.0 / static_cast<double>(leaves);
  double total = 0.0;
  for (std::size_t k = 0; k < leaves; ++k) {
    const double c = t.center(depth, k);
    const double w = t.half_width(depth, k);
    total += mass * std::clamp((x - (c - w)) / (2.0 * w), 0.0, 1.0);
  }
  return total;
}

void sample_nested(const NestedIntervals& t, std::uint64_t first, std::span<double> out, std::uint64_t seed) {
  for (std::size_t j = 0; j < out.size(); ++j) {
    CounterRng rng(derive_seed(seed, first + j));
    double x = t.root_center;
    double half = t.root_half_width;
    std::size_t index = 0;
    for (const auto& level : t.levels) {
      index = 2 * index + (rng.next() >> 63);
      x += level[index].offset;
      half = level[index].half_width;
    }
    out[j] = x + half * (2.0 * rng.uniform() - 1.0);
  }
}

void sample_self_similar(const SelfSimilar& s, std::uint64_t first, std::span<double> out, std::uint64_t seed) {
  const double diameter = self_similar_hull(s).width();
  std::vector<double> cumulative(s.weights.size());
  std::partial_sum(s.weights.begin(), s.weights.end(), cumulative.begin());
  for (std::size_t j = 0; j < out.size(); ++j) {
    CounterRng rng(derive_seed(seed, first + j));
    double x = 0.0;
    double factor = 1.0;
    while (factor * diameter >= kSampleDiameter) {
      const double u = rng.uniform() * cumulative.back();
      std::size_t k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
      k = std::min(k, s.weights.size() - 1);
      x += factor * s.shifts[k];
      factor *= s.ratios[k];
    }
    out[j] = x;
  }
}

// -------------------------------------------------------------- generic cdf

bool has_cdf(const WeightMeasure& nu) {
  return std::visit(Overloaded{
                        [](const Density&) { return true; },
                        [](const NestedIntervals&) { return true; },
                        [](const PointMass&) { return true; },
                        [](const Scaled& s) { return has_cdf(s.inner); },
                        [](const auto&) { return false; },
                    },
                    nu.node().value);
}

double measure_cdf(const WeightMeasure& nu, double x) {
  return std::visit(Overloaded{
                        [&](const Density& d) { return density_cdf(d, x); },
                        [&](const NestedIntervals& t) { return nested_cdf(t, x); },
                        [&](const PointMass& p) { return x >= p.at ? 1.0 : 0.0; },
                        [&](const Scaled& s) { return measure_cdf(s.inner, x / s.factor); },
                        [&](const auto&) -> double { throw InvalidMeasure("cdf unavailable for this measure"); },
                    },
                    nu.node().value);
}

GridMasses convolve_grids(const GridMasses& a, const GridMasses& b) {
  // Mass uniform in cells i and j sums to a symmetric triangle over cells
  // i+j and i+j+1, half in each.
  GridMasses out;
  out.cell_width = a.cell_width;
  out.first_cell = a.first_cell + b.first_cell;
  out.masses.assign(a.masses.size() + b.masses.size(), 0.0);
  for (std::size_t i = 0; i < a.masses.size(); ++i) {
    const double ai = 0.5 * a.masses[i];
    if (ai == 0.0) continue;
    double* dst = out.masses.data() + i;
    for (std::size_t j = 0; j < b.masses.size(); ++j) {
      const double m = ai * b.masses[j];
      dst[j] += m;
      dst[j + 1] += m;
    }
  }
  return out;
}

double grid_cdf(const GridMasses& g, double x) {
  const double pos = x / g.cell_width - static_cast<double>(g.first_cell);
  if (pos <= 0.0) return 0.0;
  double total = 0.0;
  const auto full = static_cast<std::size_t>(std::min<double>(std::floor(pos), static_cast<double>(g.masses.size())));
  for (std::size_t k = 0; k < full; ++k) total += g.masses[k];
  if (full < g.masses.size()) total += g.masses[full] * (pos - static_cast<double>(full));
  return std::min(total, 1.0);
}

}  // namespace

// ==================================================================== public

double NestedIntervals::center(std::size_t level, std::size_t index) const {
  double c = root_center;
  for (std::size_t n = 1; n <= level; ++n) c += levels[n - 1][index >> (level - n)].offset;
  return c;
}

double NestedIntervals::half_width(std::size_t level, std::size_t index) const {
  return level == 0 ? root_half_width : levels[level - 1][index].half_width;
}

Interval density_support(const Density& d) {
  return std::visit([](const auto& s) { return Interval{s.lo, s.hi}; }, d);
}

double density_pdf(const Density& d, double x) {
  return std::visit(Overloaded{
                        [&](const Uniform& u) { return (x >= u.lo && x <= u.hi) ? 1.0 / (u.hi - u.lo) : 0.0; },
                        [&](const Triangular& t) {
                          if (x < t.lo || x > t.hi) return 0.0;
                          const double w = t.hi - t.lo;
                          if (x <= t.mode && t.mode > t.lo) return 2.0 * (x - t.lo) / (w * (t.mode - t.lo));
                          if (t.hi > t.mode) return 2.0 * (t.hi - x) / (w * (t.hi - t.mode));
                          return 2.0 / w;
                        },
                        [&](const TruncatedGaussian& g) {
                          if (x < g.lo || x > g.hi) return 0.0;
                          const double z = (x - g.mean) / g.sd;
                          return std::exp(-0.5 * z * z) / (g.sd * std::sqrt(2.0 * std::numbers::pi) * gaussian_normalizer(g));
                        },
                        [&](const PiecewiseConstant& p) {
                          if (x < p.lo || x > p.hi) return 0.0;
                          const double h = p.cell_width();
                          const auto k = std::min(p.masses.size() - 1, static_cast<std::size_t>((x - p.lo) / h));
                          return p.masses[k] / h;
                        },
                    },
                    d);
}

double density_cdf(const Density& d, double x) {
  const Interval sup = density_support(d);
  if (x <= sup.lo) return 0.0;
  if (x >= sup.hi) return 1.0;
  return std::visit(Overloaded{
                        [&](const Uniform& u) { return (x - u.lo) / (u.hi - u.lo); },
                        [&](const Triangular& t) {
                          const double w = t.hi - t.lo;
                          if (x <= t.mode) return (x - t.lo) * (x - t.lo) / (w * (t.mode - t.lo));
                          return 1.0 - (t.hi - x) * (t.hi - x) / (w * (t.hi - t.mode));
                        },
                        [&](const TruncatedGaussian& g) {
                          const double base = normal_cdf((g.lo - g.mean) / g.sd);
                          return (normal_cdf((x - g.mean) / g.sd) - base) / gaussian_normalizer(g);
                        },
                        [&](const PiecewiseConstant& p) {
                          const double pos = (x - p.lo) / p.cell_width();
                          const auto full = std::min(p.masses.size(), static_cast<std::size_t>(pos));
                          double total = 0.0;
                          for (std::size_t k = 0; k < full; ++k) total += p.masses[k];
                          if (full < p.masses.size()) total += p.masses[full] * (pos - static_cast<double>(full));
                          return std::min(total, 1.0);
                        },
                    },
                    d);
}

double self_similar_mean(const SelfSimilar& s) {
  double num = 0.0;
  double den = 1.0;
  for (std::size_t k = 0; k < s.ratios.size(); ++k) {
    num += s.weights[k] * s.shifts[k];
    den -= s.weights[k] * s.ratios[k];
  }
  return num / den;
}

Interval self_similar_hull(const SelfSimilar& s) {
  // Fixed point of [lo, hi] ↦ hull of the images; ratios are positive.
  double lo = s.shifts[0] / (1.0 - s.ratios[0]);
  double hi = lo;
  for (std::size_t k = 0; k < s.ratios.size(); ++k) {
    const double f = s.shifts[k] / (1.0 - s.ratios[k]);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  for (int it = 0; it < 4000; ++it) {
    double nlo = lo;
    double nhi = hi;
    for (std::size_t k = 0; k < s.ratios.size(); ++k) {
      nlo = std::min(nlo, s.shifts[k] + s.ratios[k] * lo);
      nhi = std::max(nhi, s.shifts[k] + s.ratios[k] * hi);
    }
    if (nlo == lo && nhi == hi) break;
    lo = nlo;
    hi = nhi;
  }
  return {lo, hi};
}

WeightMeasure make_measure(MeasureNode node) {
  std::visit(Overloaded{
                 [](const Density& d) { validate_density(d); },
                 [](const SelfSimilar& s) { validate_self_similar(s); },
                 [](const NestedIntervals& t) { validate_nested(t); },
                 [](const Convolution& c) { require(!c.components.empty(), "convolution: no components"); },
                 [](const Scaled& s) {
                   require(finite(s.factor) && s.factor > 0.0, "scale: factor must be positive");
                 },
                 [](const PointMass& p) { require(finite(p.at), "point mass: non-finite location"); },
             },
             node.value);
  return WeightMeasure(std::make_shared<const MeasureNode>(std::move(node)));
}

WeightMeasure WeightMeasure::density(Density d) { return make_measure(MeasureNode{std::move(d)}); }
WeightMeasure WeightMeasure::self_similar(SelfSimilar s) { return make_measure(MeasureNode{std::move(s)}); }
WeightMeasure WeightMeasure::nested(NestedIntervals tree) { return make_measure(MeasureNode{std::move(tree)}); }
WeightMeasure WeightMeasure::point_mass(double at) { return make_measure(MeasureNode{PointMass{at}}); }

WeightMeasure::Kind WeightMeasure::kind() const { return static_cast<Kind>(node_->value.index()); }

bool WeightMeasure::is_atomless() const {
  return std::visit(Overloaded{
                        [](const PointMass&) { return false; },
                        [](const Convolution& c) {
                          return std::any_of(c.components.begin(), c.components.end(),
                                             [](const WeightMeasure& m) { return m.is_atomless(); });
                        },
                        [](const Scaled& s) { return s.inner.is_atomless(); },
                        [](const auto&) { return true; },
                    },
                    node_->value);
}

Interval WeightMeasure::support() const {
  return std::visit(Overloaded{
                        [](const Density& d) { return density_support(d); },
                        [](const SelfSimilar& s) { return self_similar_hull(s); },
                        [](const NestedIntervals& t) {
                          return Interval{t.root_center - t.root_half_width, t.root_center + t.root_half_width};
                        },
                        [](const Convolution& c) {
                          Interval sum{0.0, 0.0};
                          for (const auto& m : c.components) {
                            const Interval s = m.support();
                            sum.lo += s.lo;
                            sum.hi += s.hi;
                          }
                          return sum;
                        },
                        [](const Scaled& s) {
                          const Interval in = s.inner.support();
                          return Interval{s.factor * in.lo, s.factor * in.hi};
                        },
                        [](const PointMass& p) { return Interval{p.at, p.at}; },
                    },
                    node_->value);
}

CharFnValue char_fn(const WeightMeasure& nu, double xi) {
  return std::visit(Overloaded{
                        [&](const Density& d) { return density_char_fn(d, xi); },
                        [&](const SelfSimilar& s) { return self_similar_char_fn(s, xi); },
                        [&](const NestedIntervals& t) { return nested_char_fn(t, xi); },
                        [&](const Convolution& c) {
                          CharFnValue product{1.0, 0.0};
                          for (const auto& m : c.components) product *= char_fn(m, xi);
                          return product;
                        },
                        [&](const Scaled& s) { return char_fn(s.inner, s.factor * xi); },
                        [&](const PointMass& p) { return std::polar(1.0, xi * p.at); },
                    },
                    nu.node().value);
}

WeightMeasure convolve(const WeightMeasure& nu, const WeightMeasure& mu) {
  return make_measure(MeasureNode{Convolution{{nu, mu}}});
}

WeightMeasure convolution_power(const WeightMeasure& nu, int n) {
  if (n < 1) throw InvalidMeasure("convolution power must be at least 1 (n = 0 is a point mass)");
  if (n == 1) return nu;
  return make_measure(MeasureNode{Convolution{std::vector<WeightMeasure>(static_cast<std::size_t>(n), nu)}});
}

WeightMeasure scale(const WeightMeasure& nu, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidMeasure("scale factor must be positive and finite");
  return make_measure(MeasureNode{Scaled{t, nu}});
}

std::uint64_t component_seed(std::uint64_t seed, std::size_t component) {
  return derive_seed(mix64(seed ^ 0xC6A4A7935BD1E995ULL), component);
}

void sample_range(const WeightMeasure& nu, std::uint64_t first_index, std::span<double> out, std::uint64_t seed) {
  std::visit(Overloaded{
                 [&](const Density& d) { sample_density(d, first_index, out, seed); },
                 [&](const SelfSimilar& s) { sample_self_similar(s, first_index, out, seed); },
                 [&](const NestedIntervals& t) { sample_nested(t, first_index, out, seed); },
                 [&](const Convolution& c) {
                   std::fill(out.begin(), out.end(), 0.0);
                   std::vector<double> part(out.size());
                   for (std::size_t k = 0; k < c.components.size(); ++k) {
                     sample_range(c.components[k], first_index, part, component_seed(seed, k));
                     for (std::size_t j = 0; j < out.size(); ++j) out[j] += part[j];
                   }
                 },
                 [&](const Scaled& s) {
                   sample_range(s.inner, first_index, out, seed);
                   for (double& x : out) x *= s.factor;
                 },
                 [&](const PointMass& p) { std::fill(out.begin(), out.end(), p.at); },
             },
             nu.node().value);
}

std::vector<double> sample(const WeightMeasure& nu, std::size_t count, std::uint64_t seed) {
  std::vector<double> out(count);
  sample_range(nu, 0, out, seed);
  return out;
}

double cdf(const WeightMeasure& nu, double x) { return measure_cdf(nu, x); }

double tail_mass(const WeightMeasure& nu, double n) {
  if (!(n > 0.0)) throw std::invalid_argument("tail_mass: N must be positive");
  const Interval sup = nu.support();
  if (sup.lo >= -n && sup.hi <= n) return 0.0;
  if (sup.hi < -n || sup.lo > n) return 1.0;
  return std::visit(Overloaded{
                        [&](const SelfSimilar& s) { return self_similar_tail(s, n); },
                        [&](const PointMass& p) { return std::abs(p.at) > n ? 1.0 : 0.0; },
                        [&](const Scaled& s) { return tail_mass(s.inner, n / s.factor); },
                        [&](const Convolution&) {
                          // Exact cell masses at two resolutions; linear interpolation inside cells.
                          auto estimate = [&](double h) {
                            const GridMasses g = grid_masses(nu, h);
                            return std::clamp(grid_cdf(g, -n) + (1.0 - grid_cdf(g, n)), 0.0, 1.0);
                          };
                          const double h = sup.width() / 4096.0;
                          const double coarse = estimate(h);
                          const double fine = estimate(h / 2.0);
                          if (std::abs(fine - coarse) > kTailTolerance)
                            throw AccuracyError("tail_mass of convolution not resolved", std::abs(fine - coarse));
                          return fine;
                        },
                        [&](const auto&) {
                          return std::clamp(measure_cdf(nu, -n) + (1.0 - measure_cdf(nu, n)), 0.0, 1.0);
                        },
                    },
                    nu.node().value);
}

PiecewiseConstant piecewise_approximation(const WeightMeasure& nu, std::size_t cells) {
  return std::visit(Overloaded{
                        [&](const Density& d) {
                          return std::visit(Overloaded{
                                                [](const Uniform& u) { return PiecewiseConstant{u.lo, u.hi, {1.0}}; },
                                                [](const PiecewiseConstant& p) { return p; },
                                                [&](const auto& s) {
                                                  PiecewiseConstant p{s.lo, s.hi, std::vector<double>(cells)};
                                                  const Density shape = s;
                                                  const double h = (s.hi - s.lo) / static_cast<double>(cells);
                                                  double prev = 0.0;
                                                  for (std::size_t k = 0; k < cells; ++k) {
                                                    const double next = k + 1 == cells ? 1.0 : density_cdf(shape, s.lo + h * (k + 1));
                                                    p.masses[k] = next - prev;
                                                    prev = next;
                                                  }
                                                  return p;
                                                },
                                            },
                                            d);
                        },
                        [&](const Scaled& s) {
                          PiecewiseConstant p = piecewise_approximation(s.inner, cells);
                          p.lo *= s.factor;
                          p.hi *= s.factor;
                          return p;
                        },
                        [](const auto&) -> PiecewiseConstant {
                          throw InvalidMeasure("piecewise approximation needs a density");
                        },
                    },
                    nu.node().value);
}

GridMasses grid_masses(const WeightMeasure& nu, double cell_width) {
  if (!(cell_width > 0.0)) throw std::invalid_argument("grid_masses: cell width must be positive");
  if (const auto* conv = std::get_if<Convolution>(&nu.node().value)) {
    GridMasses acc = grid_masses(conv->components.front(), cell_width);
    for (std::size_t k = 1; k < conv->components.size(); ++k)
      acc = convolve_grids(acc, grid_masses(conv->components[k], cell_width));
    return acc;
  }
  if (!has_cdf(nu)) throw InvalidMeasure("grid masses need a density, nested-interval or convolution measure");
  const Interval sup = nu.support();
  GridMasses g;
  g.cell_width = cell_width;
  g.first_cell = static_cast<std::int64_t>(std::floor(sup.lo / cell_width));
  const auto last = static_cast<std::int64_t>(std::floor(sup.hi / cell_width));
  g.masses.resize(static_cast<std::size_t>(last - g.first_cell + 1));
  double prev = measure_cdf(nu, static_cast<double>(g.first_cell) * cell_width);
  for (std::size_t k = 0; k < g.masses.size(); ++k) {
    const double next = measure_cdf(nu, static_cast<double>(g.first_cell + static_cast<std::int64_t>(k) + 1) * cell_width);
    g.masses[k] = next - prev;
    prev = next;
  }
  return g;
}

}  // namespace ergavg
