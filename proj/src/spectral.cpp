#include "ergavg/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ergavg/errors.hpp"

namespace ergavg {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kSpectralMassTolerance = 1e-9;

}  // namespace

SpectralModel make_spectral(std::vector<SpectralAtom> atoms, std::optional<SpectralDensity> ac) {
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!std::isfinite(a.frequency) || !(a.mass > 0.0)) throw InvalidMeasure("spectral model: atoms need finite frequency and positive mass");
    total += a.mass;
  }
  if (ac) {
    if (!(ac->mass > 0.0)) throw InvalidMeasure("spectral model: density part needs positive mass");
    WeightMeasure::density(ac->density);  // validates the shape
    total += ac->mass;
  }
  if (std::abs(total - 1.0) > kSpectralMassTolerance)
    throw InvalidMeasure("spectral model: total mass " + std::to_string(total) + " is not 1");
  return SpectralModel{std::move(atoms), std::move(ac)};
}

std::complex<double> correlation_from_spectrum(const SpectralModel& sigma, double t) {
  std::complex<double> rho{0.0, 0.0};
  for (const auto& a : sigma.atoms) rho += a.mass * std::polar(1.0, a.frequency * t);
  if (sigma.ac) rho += sigma.ac->mass * char_fn(WeightMeasure::density(sigma.ac->density), t);
  return rho;
}

FourierSeries cosine_observable(std::size_t dimension, std::size_t coord, int k) {
  if (coord >= dimension || k == 0) throw std::invalid_argument("cosine observable: bad coordinate or frequency");
  std::vector<int> plus(dimension, 0), minus(dimension, 0);
  plus[coord] = k;
  minus[coord] = -k;
  const double c = std::numbers::sqrt2 / 2.0;
  return FourierSeries{{{plus, {c, 0.0}}, {minus, {c, 0.0}}}};
}

double observable_value(const Observable& f, std::span<const double> x) {
  return std::visit(Overloaded{
                        [&](const FourierSeries& s) {
                          double v = 0.0;
                          for (const auto& term : s.terms) {
                            double phase = 0.0;
                            for (std::size_t j = 0; j < term.k.size(); ++j) phase += term.k[j] * x[j];
                            phase = 2.0 * std::numbers::pi * frac(phase);
                            v += term.c.real() * std::cos(phase) - term.c.imag() * std::sin(phase);
                          }
                          return v;
                        },
                        [&](const BoxIndicator& b) {
                          for (std::size_t j = 0; j < b.box.arcs.size(); ++j)
                            if (!(x[j] < b.box.arcs[j])) return 0.0;
                          return 1.0;
                        },
                        [](const ConstantObservable& c) { return c.value; },
                    },
                    f);
}

double observable_mean(const Observable& f) {
  return std::visit(Overloaded{
                        [](const FourierSeries& s) {
                          double m = 0.0;
                          for (const auto& term : s.terms)
                            if (std::all_of(term.k.begin(), term.k.end(), [](int v) { return v == 0; })) m += term.c.real();
                          return m;
                        },
                        [](const BoxIndicator& b) { return b.box.measure(); },
                        [](const ConstantObservable& c) { return c.value; },
                    },
                    f);
}

double observable_sup(const Observable& f) {
  return std::visit(Overloaded{
                        [](const FourierSeries& s) {
                          double m = 0.0;
                          for (const auto& term : s.terms) m += std::abs(term.c);
                          return m;
                        },
                        [](const BoxIndicator&) { return 1.0; },
                        [](const ConstantObservable& c) { return std::abs(c.value); },
                    },
                    f);
}

SpectralModel spectrum_of_observable(const TorusWinding& flow, const FourierSeries& f) {
  double norm = 0.0;
  std::vector<SpectralAtom> atoms;
  for (const auto& term : f.terms) {
    if (term.k.size() != flow.dimension()) throw std::invalid_argument("observable: frequency dimension mismatch");
    if (std::all_of(term.k.begin(), term.k.end(), [](int v) { return v == 0; })) {
      if (std::abs(term.c) > 1e-12) throw std::invalid_argument("observable: nonzero mean (zero average required)");
      continue;
    }
    const double mass = std::norm(term.c);
    if (mass == 0.0) continue;
    long double w = 0.0L;
    for (std::size_t j = 0; j < term.k.size(); ++j) w += static_cast<long double>(term.k[j]) * flow.alpha[j];
    atoms.push_back({static_cast<double>(2.0L * std::numbers::pi_v<long double> * w), mass});
    norm += mass;
  }
  if (atoms.empty()) throw std::invalid_argument("observable: zero function has no cyclic spectrum");
  if (std::abs(norm - 1.0) > kSpectralMassTolerance)
    throw std::invalid_argument("observable: Σ|c_k|² = " + std::to_string(norm) + ", expected 1");
  std::sort(atoms.begin(), atoms.end(), [](const auto& x, const auto& y) { return x.frequency < y.frequency; });
  std::vector<SpectralAtom> merged;
  for (const auto& a : atoms) {
    if (!merged.empty() && std::abs(merged.back().frequency - a.frequency) <= 1e-12 * (1.0 + std::abs(a.frequency)))
      merged.back().mass += a.mass;
    else
      merged.push_back(a);
  }
  return make_spectral(std::move(merged));
}

}  // namespace ergavg
