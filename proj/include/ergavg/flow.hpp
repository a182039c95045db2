#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ergavg/slope.hpp"

namespace ergavg {

using TorusPoint = std::vector<double>;

/// Linear flow T_t x = x + tα (mod 1) on the d-torus, α₁ = 1.
struct TorusWinding {
  std::string name;
  std::vector<double> alpha;
  /// Exact form of α₂ for two-dimensional windings built from a slope.
  std::optional<QuadraticSlope> slope;

  std::size_t dimension() const { return alpha.size(); }
  /// |α|₁ = Σ|α_k|.
  double l1_norm() const;
};

TorusWinding make_winding(std::vector<double> alpha, std::string name = "winding");
/// d = 2 winding with α = (1, slope).
TorusWinding winding_from_slope(QuadraticSlope slope, std::string name);

/// Product of arcs [0, a_k).
struct BoxSet {
  std::vector<double> arcs;

  double measure() const;
};

BoxSet make_box(std::vector<double> arcs);

double frac(double x);
long double frac(long double x);
/// Distance to the nearest integer.
double circle_distance(double x);

TorusPoint evaluate_flow(const TorusWinding& flow, const TorusPoint& x, double t);

/// Length of [0, a) ∩ ([0, b) + shift) on the circle ℝ/ℤ.
double arc_overlap(double a, double b, double shift);

/// μ(A ∩ T_t B), exact product of arc overlaps.
double arc_correlation(const TorusWinding& flow, const BoxSet& a, const BoxSet& b, double t);
/// Same, with the per-coordinate displacements frac(tα_k) given directly.
double box_correlation_at_phases(const BoxSet& a, const BoxSet& b, std::span<const double> phases);

/// Convergents q_1, q_2, ... of α₂ (q_0 = 1 omitted). Rejects rational α₂.
std::vector<Convergent> slope_convergents(const TorusWinding& flow, std::size_t count);
std::vector<std::int64_t> rigidity_times(const TorusWinding& flow, std::size_t count);

}  // namespace ergavg
