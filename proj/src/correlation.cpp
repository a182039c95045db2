#include "ergavg/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ergavg {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double spike_value(const SpikeProfile& p, double t) {
  const double u = std::abs(t);
  double v = p.baseline + p.core_height * triangular_bump(u, p.core_half_width);
  // spikes are sorted and disjoint: locate the candidate by binary search
  auto it = std::lower_bound(p.spikes.begin(), p.spikes.end(), u,
                             [](const Spike& s, double x) { return s.center + s.half_width < x; });
  if (it != p.spikes.end()) v += it->height * triangular_bump(u - it->center, it->half_width);
  return v;
}

}  // namespace

double triangular_bump(double u, double half_width) { return std::max(0.0, 1.0 - std::abs(u) / half_width); }

SpikeProfile make_spike_profile(SpikeProfile p) {
  if (!std::isfinite(p.baseline) || !(p.core_half_width > 0.0) || !std::isfinite(p.core_height))
    throw std::invalid_argument("spike profile: bad baseline or core bump");
  if (!(p.at_zero() > 0.0)) throw std::invalid_argument("spike profile: ρ(0) must be positive");
  double prev_right = p.core_half_width;
  double prev_center = 0.0;
  double extreme = std::abs(p.baseline);
  for (std::size_t j = 0; j < p.spikes.size(); ++j) {
    const Spike& s = p.spikes[j];
    if (!(s.half_width > 0.0) || !std::isfinite(s.center) || !std::isfinite(s.height))
      throw std::invalid_argument("spike profile: spike " + std::to_string(j + 1) + " is malformed");
    if (!(s.center - s.half_width >= prev_right))
      throw std::invalid_argument("spike profile: spike " + std::to_string(j + 1) + " overlaps its predecessor");
    if (p.growth && j > 0 && s.center < *p.growth * prev_center * (1.0 - 1e-12))
      throw std::invalid_argument("spike profile: spike " + std::to_string(j + 1) + " violates the growth factor");
    extreme = std::max(extreme, std::abs(p.baseline + s.height));
    prev_right = s.center + s.half_width;
    prev_center = s.center;
  }
  if (p.growth && !(*p.growth > 1.0)) throw std::invalid_argument("spike profile: growth factor must exceed 1");
  // piecewise linear, so extremes sit at breakpoints
  if (extreme > p.at_zero() * (1.0 + 1e-12)) throw std::invalid_argument("spike profile: |ρ(t)| would exceed ρ(0)");
  return p;
}

SpikeProfile geometric_spikes(double growth, double half_width, double height, std::size_t count, double baseline) {
  SpikeProfile p;
  p.baseline = baseline;
  p.core_half_width = half_width;
  p.core_height = height;
  p.growth = growth;
  double h = 1.0;
  for (std::size_t j = 0; j < count; ++j) {
    h *= growth;
    p.spikes.push_back({h, half_width, height});
  }
  return make_spike_profile(std::move(p));
}

SpikeProfile progression_spikes(double step, double half_width, double height, std::size_t count, double baseline) {
  SpikeProfile p;
  p.baseline = baseline;
  p.core_half_width = half_width;
  p.core_height = height;
  for (std::size_t j = 1; j <= count; ++j) p.spikes.push_back({step * static_cast<double>(j), half_width, height});
  return make_spike_profile(std::move(p));
}

double evaluate_correlation(const CorrelationModel& model, double t) {
  return std::visit(Overloaded{
                        [&](const ClosedFormCorrelation& c) { return arc_correlation(c.flow, c.a, c.b, t); },
                        [&](const BochnerCorrelation& b) { return correlation_from_spectrum(b.sigma, t).real(); },
                        [&](const SpikeProfile& p) { return spike_value(p, t); },
                    },
                    model);
}

}  // namespace ergavg
