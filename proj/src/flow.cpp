#include "ergavg/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ergavg/errors.hpp"

namespace ergavg {

double TorusWinding::l1_norm() const {
  double s = 0.0;
  for (double a : alpha) s += std::abs(a);
  return s;
}

TorusWinding make_winding(std::vector<double> alpha, std::string name) {
  if (alpha.empty()) throw std::invalid_argument("winding: dimension must be at least 1");
  if (alpha.front() != 1.0) throw std::invalid_argument("winding: α₁ must equal 1");
  for (double a : alpha)
    if (!std::isfinite(a)) throw std::invalid_argument("winding: non-finite direction");
  return TorusWinding{std::move(name), std::move(alpha), std::nullopt};
}

TorusWinding winding_from_slope(QuadraticSlope slope, std::string name) {
  const ContinuedFraction cf(slope);
  TorusWinding w = make_winding({1.0, static_cast<double>(cf.value())}, std::move(name));
  w.slope = slope;
  return w;
}

double BoxSet::measure() const {
  double m = 1.0;
  for (double a : arcs) m *= a;
  return m;
}

BoxSet make_box(std::vector<double> arcs) {
  if (arcs.empty()) throw std::invalid_argument("box: no arcs");
  for (double a : arcs)
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("box: arc lengths must lie in (0,1)");
  return BoxSet{std::move(arcs)};
}

double frac(double x) {
  const double f = x - std::floor(x);
  return f >= 1.0 ? 0.0 : f;
}

long double frac(long double x) {
  const long double f = x - std::floor(x);
  return f >= 1.0L ? 0.0L : f;
}

double circle_distance(double x) {
  const double f = frac(x);
  return std::min(f, 1.0 - f);
}

TorusPoint evaluate_flow(const TorusWinding& flow, const TorusPoint& x, double t) {
  if (x.size() != flow.dimension()) throw std::invalid_argument("evaluate_flow: point dimension mismatch");
  TorusPoint y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const long double shift = static_cast<long double>(t) * static_cast<long double>(flow.alpha[k]);
    y[k] = static_cast<double>(frac(static_cast<long double>(x[k]) + frac(shift)));
  }
  return y;
}

double arc_overlap(double a, double b, double shift) {
  const double d = frac(shift);
  return std::max(0.0, std::min(a - d, b)) + std::max(0.0, std::min(a, d + b - 1.0));
}

double box_correlation_at_phases(const BoxSet& a, const BoxSet& b, std::span<const double> phases) {
  if (a.arcs.size() != b.arcs.size() || a.arcs.size() != phases.size())
    throw std::invalid_argument("box correlation: dimension mismatch");
  double c = 1.0;
  for (std::size_t k = 0; k < phases.size(); ++k) c *= arc_overlap(a.arcs[k], b.arcs[k], phases[k]);
  return c;
}

double arc_correlation(const TorusWinding& flow, const BoxSet& a, const BoxSet& b, double t) {
  if (a.arcs.size() != flow.dimension()) throw std::invalid_argument("arc_correlation: box dimension mismatch");
  std::vector<double> phases(flow.dimension());
  for (std::size_t k = 0; k < phases.size(); ++k)
    phases[k] = static_cast<double>(frac(static_cast<long double>(t) * static_cast<long double>(flow.alpha[k])));
  return box_correlation_at_phases(a, b, phases);
}

std::vector<Convergent> slope_convergents(const TorusWinding& flow, std::size_t count) {
  if (flow.dimension() != 2 || !flow.slope)
    throw std::invalid_argument("rigidity times need a two-dimensional winding with an exact slope");
  const ContinuedFraction cf(*flow.slope);
  if (cf.is_rational()) throw std::invalid_argument("rigidity times: rational slope (the winding is periodic)");
  auto all = cf.convergents(count + 1);
  all.erase(all.begin());
  return all;
}

std::vector<std::int64_t> rigidity_times(const TorusWinding& flow, std::size_t count) {
  std::vector<std::int64_t> out;
  for (const auto& c : slope_convergents(flow, count)) out.push_back(c.q);
  return out;
}

}  // namespace ergavg
