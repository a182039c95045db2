#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

namespace ergavg {

/// Value of the characteristic function ν̂(ξ) = ∫ e^{iξt} dν(t).
using CharFnValue = std::complex<double>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
};

// --- density shapes -------------------------------------------------------

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

struct Triangular {
  double lo = 0.0;
  double mode = 1.0;
  double hi = 2.0;
};

struct TruncatedGaussian {
  double mean = 0.0;
  double sd = 1.0;
  double lo = -1.0;
  double hi = 1.0;
};

/// Equal-width cells on [lo, hi]; masses[k] is the mass of cell k.
struct PiecewiseConstant {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> masses;

  double cell_width() const { return (hi - lo) / static_cast<double>(masses.size()); }
};

using Density = std::variant<Uniform, Triangular, TruncatedGaussian, PiecewiseConstant>;

/// Invariant measure of the IFS { x ↦ ratios[k]·x + shifts[k] } with weights.
struct SelfSimilar {
  std::vector<double> ratios;
  std::vector<double> shifts;
  std::vector<double> weights;
};

/// One node of a nested-interval tree. The center is stored relative to the
/// parent's center so that deep levels keep full relative precision.
struct NestedNode {
  double offset = 0.0;
  double half_width = 0.0;
};

/// Binary tree of closed intervals; level n has 2^n nodes, each of mass 2^-n,
/// and the children of node k are nodes 2k and 2k+1 of the next level. Mass is
/// uniform inside the leaves.
struct NestedIntervals {
  double root_center = 0.5;
  double root_half_width = 0.5;
  std::vector<std::vector<NestedNode>> levels;

  std::size_t depth() const { return levels.size(); }
  /// Absolute center of node k at level n (level 0 is the root), in double.
  double center(std::size_t level, std::size_t index) const;
  double half_width(std::size_t level, std::size_t index) const;
};

/// Unit mass at a point. Utility for convolution-identity checks only; every
/// averaging entry point rejects it.
struct PointMass {
  double at = 0.0;
};

struct MeasureNode;

/// Immutable probability measure on the real line. Cheap to copy; safe to
/// share across threads.
class WeightMeasure {
 public:
  enum class Kind { Density, SelfSimilar, NestedIntervals, Convolution, Scaled, PointMass };

  static WeightMeasure density(Density d);
  static WeightMeasure uniform(double lo, double hi) { return density(Uniform{lo, hi}); }
  static WeightMeasure self_similar(SelfSimilar s);
  static WeightMeasure nested(NestedIntervals tree);
  static WeightMeasure point_mass(double at);

  Kind kind() const;
  const MeasureNode& node() const { return *node_; }

  /// False when the measure has an atom (a point mass not smoothed by convolution).
  bool is_atomless() const;
  /// Closed interval containing the support.
  Interval support() const;

 private:
  friend WeightMeasure make_measure(MeasureNode node);
  explicit WeightMeasure(std::shared_ptr<const MeasureNode> node) : node_(std::move(node)) {}

  std::shared_ptr<const MeasureNode> node_;
};

struct Convolution {
  std::vector<WeightMeasure> components;
};

struct Scaled {
  double factor = 1.0;
  WeightMeasure inner;
};

struct MeasureNode {
  std::variant<Density, SelfSimilar, NestedIntervals, Convolution, Scaled, PointMass> value;
};

/// Validates and wraps a node.
WeightMeasure make_measure(MeasureNode node);

// --- operations -------------------------------------------------------------

CharFnValue char_fn(const WeightMeasure& nu, double xi);

/// ν ∗ μ.
WeightMeasure convolve(const WeightMeasure& nu, const WeightMeasure& mu);

/// ν^{∗n}, n ≥ 1. Returns ν itself for n = 1.
WeightMeasure convolution_power(const WeightMeasure& nu, int n);

/// Pushforward under r ↦ t·r, t > 0.
WeightMeasure scale(const WeightMeasure& nu, double t);

/// `count` i.i.d. draws. Draw i depends only on (seed, i), so any contiguous
/// range can be produced independently with sample_range.
std::vector<double> sample(const WeightMeasure& nu, std::size_t count, std::uint64_t seed);
void sample_range(const WeightMeasure& nu, std::uint64_t first_index, std::span<double> out,
                  std::uint64_t seed);

/// ν((−∞, x]) for densities, nested intervals, point masses and their rescalings.
double cdf(const WeightMeasure& nu, double x);

/// ν(ℝ \ [−N, N]).
double tail_mass(const WeightMeasure& nu, double n);

/// Seed used for component c of a convolution sampled with `seed`.
std::uint64_t component_seed(std::uint64_t seed, std::size_t component);

// --- discretization -----------------------------------------------------------

/// Piecewise-constant approximation with equal cells over the support: exact
/// for uniform and piecewise densities, cell masses from the exact CDF for the
/// other shapes. Accepts Density and Scaled(Density).
PiecewiseConstant piecewise_approximation(const WeightMeasure& nu, std::size_t cells);

/// Masses of the cells [k·h, (k+1)·h) for k = first_cell, first_cell+1, ...
struct GridMasses {
  double cell_width = 0.0;
  std::int64_t first_cell = 0;
  std::vector<double> masses;
};

/// Cell masses on the grid hℤ. Densities use the exact CDF; convolutions
/// convolve their components' piecewise-constant approximations exactly.
GridMasses grid_masses(const WeightMeasure& nu, double cell_width);

// --- density helpers ------------------------------------------------------------

Interval density_support(const Density& d);
double density_pdf(const Density& d, double x);
double density_cdf(const Density& d, double x);

/// Mean of a self-similar measure.
double self_similar_mean(const SelfSimilar& s);
/// Convex hull of the attractor.
Interval self_similar_hull(const SelfSimilar& s);

}  // namespace ergavg
