#pragma once

#include <complex>
#include <optional>
#include <variant>
#include <vector>

#include "ergavg/flow.hpp"
#include "ergavg/measure.hpp"

namespace ergavg {

/// Spectral measure on the frequency line: atoms plus an optional
/// absolutely continuous part with total mass `mass` and shape `density`.
struct SpectralAtom {
  double frequency = 0.0;
  double mass = 0.0;
};

struct SpectralDensity {
  double mass = 1.0;
  Density density;
};

struct SpectralModel {
  std::vector<SpectralAtom> atoms;
  std::optional<SpectralDensity> ac;
};

SpectralModel make_spectral(std::vector<SpectralAtom> atoms, std::optional<SpectralDensity> ac = std::nullopt);

/// ρ(t) = ∫ e^{irt} dσ(r).
std::complex<double> correlation_from_spectrum(const SpectralModel& sigma, double t);

// --- observables on the torus ----------------------------------------------

struct FourierTerm {
  std::vector<int> k;
  std::complex<double> c;
};

/// Trigonometric polynomial Σ c_k e^{2πi k·x}. observable_value reads it as a
/// real function, so observables must come in conjugate pairs (c_{−k} = conj c_k).
struct FourierSeries {
  std::vector<FourierTerm> terms;
};

struct BoxIndicator {
  BoxSet box;
};

struct ConstantObservable {
  double value = 1.0;
};

using Observable = std::variant<FourierSeries, BoxIndicator, ConstantObservable>;

/// √2·cos(2π·k·x_coord) on the d-torus: zero mean, unit L² norm.
FourierSeries cosine_observable(std::size_t dimension, std::size_t coord, int k = 1);

double observable_value(const Observable& f, std::span<const double> x);
double observable_mean(const Observable& f);
/// Declared bound on sup|f|.
double observable_sup(const Observable& f);

/// Atoms at 2π k·α with masses |c_k|²; coinciding frequencies are merged.
SpectralModel spectrum_of_observable(const TorusWinding& flow, const FourierSeries& f);

}  // namespace ergavg
