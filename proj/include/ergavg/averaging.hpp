#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "ergavg/correlation.hpp"
#include "ergavg/decay_curve.hpp"
#include "ergavg/flow.hpp"
#include "ergavg/measure.hpp"
#include "ergavg/parallel.hpp"
#include "ergavg/spectral.hpp"

namespace ergavg {

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// P_t f(x) = ∫ f(T_{rt}x) dν(r) by Monte Carlo over r ~ ν.
McEstimate weighted_average_pointwise(const TorusWinding& flow, const Observable& f, const WeightMeasure& nu,
                                      double t, const TorusPoint& x, std::size_t n_r, std::uint64_t seed,
                                      const ExecPolicy& exec = {});

struct L1Deviation {
  double value = 0.0;
  double std_error = 0.0;
  /// sup|f| / √n_r: the inner-sample bias of |P̂_t f − ∫f| can reach this.
  double bias_bound = 0.0;
  std::size_t n_x = 0;
  std::size_t n_r = 0;
};

/// Nested Monte Carlo estimate of ‖P_t f − ∫f dμ‖₁, x ~ μ uniform on the torus.
L1Deviation l1_deviation(const TorusWinding& flow, const Observable& f, const WeightMeasure& nu, double t,
                         std::size_t n_x, std::size_t n_r, std::uint64_t seed, const ExecPolicy& exec = {});

/// Unbiased nested Monte Carlo estimate of ‖P_t f − ∫f dμ‖₂² (pairwise
/// U-statistic over the inner samples, so no 1/n_r inflation).
McEstimate l2_deviation_squared(const TorusWinding& flow, const Observable& f, const WeightMeasure& nu, double t,
                                std::size_t n_x, std::size_t n_r, std::uint64_t seed, const ExecPolicy& exec = {});

/// (∫ |ν̂(tr)|² dσ(r))^{1/2} = ‖P_t f‖₂ on the cyclic space with spectral measure σ.
double l2_norm_spectral(const SpectralModel& sigma, const WeightMeasure& nu, double t);

/// Law of r − s for independent r, s ~ ν, with ν replaced by its
/// piecewise-constant approximation: a piecewise-linear density with knots
/// on the lattice hℤ.
class DifferenceDensity {
 public:
  DifferenceDensity(const PiecewiseConstant& cells);

  double cell_width() const { return h_; }
  /// Support is [−reach, reach].
  double reach() const { return h_ * static_cast<double>(coef_.size() / 2 + 1); }
  double pdf(double u) const;
  double cdf(double u) const;
  /// Knots k·h inside [lo, hi].
  void knots_in(double lo, double hi, std::vector<double>& out) const;

 private:
  double h_;
  std::vector<double> coef_;  // coef_[k + K − 1] = Σ_i m_i m_{i−k}
};

/// Difference density of a Density or Scaled(Density) weight.
bool has_difference_density(const WeightMeasure& nu);
DifferenceDensity difference_density(const WeightMeasure& nu, std::size_t cells);
/// True when the piecewise-constant approximation is the measure itself.
bool difference_density_is_exact(const WeightMeasure& nu);

struct QuadratureSpec {
  std::size_t grid_cells = 1024;
  double tolerance = 1e-10;
};

struct PairIntegral {
  double value = 0.0;
  double error = 0.0;
};

/// ∬ ρ(t(r−s)) dν(r) dν(s) by sampling the difference r − s.
PairIntegral correlation_pair_integral_sampled(const CorrelationModel& rho, const WeightMeasure& nu, double t,
                                               std::size_t samples, std::uint64_t seed, const ExecPolicy& exec = {});
/// Same integral against the difference density; ν must be a density.
PairIntegral correlation_pair_integral_quadrature(const CorrelationModel& rho, const WeightMeasure& nu, double t,
                                                  const QuadratureSpec& spec = {});
/// Quadrature when ν has a difference density, sampling otherwise.
PairIntegral correlation_pair_integral(const CorrelationModel& rho, const WeightMeasure& nu, double t,
                                       const QuadratureSpec& spec, std::size_t samples, std::uint64_t seed,
                                       const ExecPolicy& exec = {});

struct DescentReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

/// lhs = ∫ m² dσ, rhs = (∫ m^{2n} dσ)^{1/n} for a multiplier magnitude m ∈ [0,1].
/// `oscillation` hints how many oscillations of m fall in a unit frequency span.
DescentReport holder_descent_check(const SpectralModel& sigma, const std::function<double(double)>& magnitude, int n,
                                   double oscillation = 1.0);
/// With m(r) = |ν̂(tr)|.
DescentReport holder_descent_check(const SpectralModel& sigma, const WeightMeasure& nu, double t, int n);

struct PointResult {
  double value = 0.0;
  double error = 0.0;
  nlohmann::json extras = nlohmann::json::object();
};

/// Evaluates a deviation at scale t with a point-specific seed.
using Evaluator = std::function<PointResult(double t, std::uint64_t seed)>;

/// Runs the evaluator on each grid point with seed derive_seed(seed, k);
/// exceptions mark the point failed.
DecayCurve convergence_scan(const Evaluator& evaluator, const std::vector<double>& grid, std::uint64_t seed);

struct ProbeOptions {
  /// N of the diagonal band ν×ν{|t(r−s)| < N}.
  double band = 1.0;
  QuadratureSpec quadrature;
  /// Used only when ν has no difference density.
  std::size_t samples = 200000;
  std::uint64_t seed = 1;
  ExecPolicy exec;
};

/// |∬ρ(t(r−s)) − c| per grid point, with band and per-spike captured masses as extras.
DecayCurve almost_mixing_probe(const SpikeProfile& rho, const WeightMeasure& nu, const std::vector<double>& grid,
                               const ProbeOptions& options = {});

}  // namespace ergavg
