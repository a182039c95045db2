#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "ergavg/flow.hpp"
#include "ergavg/spectral.hpp"

namespace ergavg {

/// ρ(t) = μ(A ∩ T_t B) for a winding.
struct ClosedFormCorrelation {
  TorusWinding flow;
  BoxSet a;
  BoxSet b;
};

struct BochnerCorrelation {
  SpectralModel sigma;
};

struct Spike {
  double center = 0.0;
  double half_width = 0.0;
  double height = 0.0;
};

/// Even function of t: baseline c, a triangular core bump at 0 and triangular
/// spikes at ±h_j. Spikes may not overlap each other or the core.
struct SpikeProfile {
  double baseline = 0.0;
  double core_half_width = 1.0;
  double core_height = 1.0;
  std::vector<Spike> spikes;
  /// When set, h_{j+1}/h_j ≥ growth is enforced.
  std::optional<double> growth;

  double at_zero() const { return baseline + core_height; }
};

SpikeProfile make_spike_profile(SpikeProfile p);
/// Spikes at h_j = growth^j, j = 1..count.
SpikeProfile geometric_spikes(double growth, double half_width, double height, std::size_t count,
                              double baseline = 0.0);
/// Spikes at h_j = j·step, j = 1..count (no growth factor).
SpikeProfile progression_spikes(double step, double half_width, double height, std::size_t count,
                                double baseline = 0.0);

using CorrelationModel = std::variant<ClosedFormCorrelation, BochnerCorrelation, SpikeProfile>;

double evaluate_correlation(const CorrelationModel& model, double t);
double triangular_bump(double u, double half_width);

}  // namespace ergavg
