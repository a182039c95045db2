#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ergavg/averaging.hpp"
#include "ergavg/errors.hpp"
#include "ergavg/presets.hpp"

using namespace ergavg;

namespace {

constexpr double pi = std::numbers::pi;

const TorusWinding& golden() {
  static const TorusWinding f = parse_flow("winding-golden");
  return f;
}

double uniform_magnitude(double xi) { return xi == 0.0 ? 1.0 : std::abs(std::sin(xi / 2.0) / (xi / 2.0)); }

template <class F>
double simpson(F f, double a, double b, int cells) {
  const double h = (b - a) / cells;
  double s = f(a) + f(b);
  for (int k = 1; k < cells; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + h * k);
  return s * h / 3.0;
}

// (∫ m² dσ, ∫ m^{2n} dσ) by Simpson on the density window and exact atom sums.
std::pair<double, double> spectral_moments(const SpectralModel& s, const std::function<double(double)>& m, int n) {
  double lhs = 0.0, rhs = 0.0;
  for (const auto& a : s.atoms) {
    const double v = m(a.frequency);
    lhs += a.mass * v * v;
    rhs += a.mass * std::pow(v, 2 * n);
  }
  if (s.ac) {
    const Interval w = density_support(s.ac->density);
    const int cells = 40000;
    const double h = w.width() / cells;
    double s2 = 0.0, s2n = 0.0;
    for (int k = 0; k <= cells; ++k) {
      const double r = w.lo + h * k;
      // the pdf is one-sided at the window edges
      const double inside = std::clamp(r, std::nextafter(w.lo, w.hi), std::nextafter(w.hi, w.lo));
      const double weight = (k == 0 || k == cells ? 1.0 : (k % 2 ? 4.0 : 2.0)) * density_pdf(s.ac->density, inside);
      const double v = m(r);
      s2 += weight * v * v;
      s2n += weight * std::pow(v, 2 * n);
    }
    lhs += s.ac->mass * s2 * h / 3.0;
    rhs += s.ac->mass * s2n * h / 3.0;
  }
  return {lhs, std::pow(rhs, 1.0 / n)};
}

struct Instance {
  SpectralModel sigma;
  WeightMeasure nu;
  double t;
};

Instance random_instance(std::mt19937_64& gen, bool densities_only) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int kind = static_cast<int>(u(gen) * 3.0);
  std::vector<SpectralAtom> atoms;
  std::optional<SpectralDensity> ac;
  const int n_atoms = kind == 1 ? 0 : 1 + static_cast<int>(u(gen) * 3.0);
  double remaining = 1.0;
  if (kind != 0) {
    const double lo = -3.0 + 4.0 * u(gen);
    const double mass = kind == 1 ? 1.0 : 0.3 + 0.4 * u(gen);
    const Density shape = u(gen) < 0.5 ? Density{Uniform{lo, lo + 0.5 + 2.0 * u(gen)}}
                                       : Density{Triangular{lo, lo + 0.5, lo + 1.0 + u(gen)}};
    ac = SpectralDensity{mass, shape};
    remaining -= mass;
  }
  for (int k = 0; k < n_atoms; ++k) {
    const double m = k + 1 == n_atoms ? remaining : remaining * (0.2 + 0.6 * u(gen));
    atoms.push_back({-8.0 + 16.0 * u(gen), m});
    remaining -= m;
  }
  const int which = static_cast<int>(u(gen) * (densities_only ? 3.0 : 4.0));
  WeightMeasure nu = which == 0   ? WeightMeasure::uniform(0.0, 0.5 + u(gen))
                     : which == 1 ? WeightMeasure::density(Triangular{0.0, u(gen), 1.0})
                     : which == 2 ? WeightMeasure::density(TruncatedGaussian{0.5, 0.1 + 0.3 * u(gen), 0.0, 1.0})
                                  : cantor_thirds();
  return {make_spectral(atoms, ac), nu, std::exp(std::log(0.1) + u(gen) * std::log(1000.0))};
}

}  // namespace

TEST_CASE("l2_norm_spectral examples") {
  const auto u = WeightMeasure::uniform(0.0, 1.0);
  for (double w : {0.5, 3.0, -11.0})
    for (double t : {0.7, 10.0}) CHECK(l2_norm_spectral(make_spectral({{w, 1.0}}), u, t) == doctest::Approx(uniform_magnitude(t * w)).epsilon(1e-13));
  CHECK(l2_norm_spectral(make_spectral({{2.0 * pi, 1.0}}), u, 1.0) < 1e-15);
  const auto sigma = make_spectral({}, SpectralDensity{1.0, Uniform{1.0, 2.0}});
  const double oracle = std::sqrt(simpson([](double r) { return std::pow(uniform_magnitude(10.0 * r), 2); }, 1.0, 2.0, 200000));
  CHECK(std::abs(l2_norm_spectral(sigma, u, 10.0) - oracle) < 1e-8);
}

TEST_CASE("property: multiplier bounded and scaling consistency") {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> a(0.1, 10.0);
  for (int k = 0; k < 40; ++k) {
    const auto inst = random_instance(gen, false);
    const double v = l2_norm_spectral(inst.sigma, inst.nu, inst.t);
    CHECK(v <= 1.0 + 1e-12);
    CHECK(v >= 0.0);
    const double f = a(gen);
    CHECK(std::abs(l2_norm_spectral(inst.sigma, scale(inst.nu, f), inst.t) - l2_norm_spectral(inst.sigma, inst.nu, f * inst.t)) < 1e-10);
  }
}

TEST_CASE("weighted_average_pointwise") {
  const auto nu = WeightMeasure::uniform(0.0, 1.0);
  const Observable one = ConstantObservable{1.0};
  const auto e = weighted_average_pointwise(golden(), one, nu, 123.0, {0.1, 0.2}, 1000, 5);
  CHECK(e.value == 1.0);
  CHECK(e.std_error == 0.0);
  CHECK_THROWS_AS(weighted_average_pointwise(golden(), one, WeightMeasure::point_mass(0.5), 1.0, {0.1, 0.2}, 10, 5),
                  InvalidMeasure);

  // classical time average of χ[0,1/2) on the circle
  const auto circle = parse_flow("winding-circle");
  const Observable half = BoxIndicator{make_box({0.5})};
  auto primitive = [](double y) { return std::floor(y) / 2.0 + std::min(y - std::floor(y), 0.5); };
  for (double t : {3.3, 47.9, 1000.3}) {
    const double x = 0.1;
    const double exact = (primitive(x + t) - primitive(x)) / t;
    CHECK(std::abs(exact - 0.5) <= 0.5 / t);
    // calibration over seeds: z-scores against the exact average behave like N(0,1)
    double z2 = 0.0;
    int outside = 0;
    const int seeds = 200;
    for (int seed = 0; seed < seeds; ++seed) {
      const auto est = weighted_average_pointwise(circle, half, nu, t, {x}, 20000, seed);
      const double z = (est.value - exact) / est.std_error;
      z2 += z * z;
      outside += std::abs(z) > 3.0;
    }
    CHECK(z2 / seeds > 0.8);
    CHECK(z2 / seeds < 1.2);
    CHECK(outside <= seeds / 50);
  }
}

TEST_CASE("Monte Carlo L2 deviation matches the spectral value") {
  const Observable f = cosine_observable(2, 1);
  const auto sigma = spectrum_of_observable(golden(), std::get<FourierSeries>(f));
  for (const auto& nu : {WeightMeasure::uniform(0.0, 1.0), cantor_thirds()}) {
    for (double t : {0.5, 2.0, 9.0}) {
      const double spectral = l2_norm_spectral(sigma, nu, t);
      const auto mc = l2_deviation_squared(golden(), f, nu, t, 4000, 64, 13);
      CHECK(std::abs(mc.value - spectral * spectral) <= 3.0 * mc.std_error);
    }
  }
}

TEST_CASE("l1_deviation: constant, Cauchy-Schwarz bridge, thread independence") {
  const auto nu = WeightMeasure::uniform(0.0, 1.0);
  const auto zero = l1_deviation(golden(), ConstantObservable{2.5}, nu, 10.0, 100, 100, 1);
  CHECK(zero.value == 0.0);
  CHECK(zero.std_error == 0.0);

  const Observable f = cosine_observable(2, 1);
  const auto sigma = spectrum_of_observable(golden(), std::get<FourierSeries>(f));
  for (double t : {0.3, 1.0, 2.0}) {
    const auto l1 = l1_deviation(golden(), f, nu, t, 2000, 2000, 3);
    CHECK(l1.bias_bound == doctest::Approx(std::sqrt(2.0) / std::sqrt(2000.0)));
    CHECK(l1.value <= l2_norm_spectral(sigma, nu, t) + 3.0 * l1.std_error);
  }
  const auto a = l1_deviation(golden(), f, nu, 7.0, 3000, 500, 21, ExecPolicy{1});
  const auto b = l1_deviation(golden(), f, nu, 7.0, 3000, 500, 21, ExecPolicy{3});
  CHECK(a.value == b.value);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("holder_descent_check") {
  const auto sigma = make_spectral({}, SpectralDensity{1.0, Uniform{0.0, 1.0}});
  const auto closed = holder_descent_check(sigma, [](double r) { return r; }, 2);
  CHECK(std::abs(closed.lhs - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(closed.rhs - std::sqrt(1.0 / 5.0)) < 1e-12);
  CHECK(closed.pass);
  const auto flat = holder_descent_check(sigma, [](double) { return 0.6; }, 3);
  CHECK(flat.lhs == doctest::Approx(0.36).epsilon(1e-13));
  CHECK(flat.rhs == doctest::Approx(0.36).epsilon(1e-13));
  CHECK(flat.pass);

  std::mt19937_64 gen(202);
  std::uniform_int_distribution<int> pick(0, 2);
  for (int k = 0; k < 60; ++k) {
    const auto inst = random_instance(gen, false);
    const int n = std::array{2, 3, 5}[pick(gen)];
    const auto report = holder_descent_check(inst.sigma, inst.nu, inst.t, n);
    CHECK(report.pass);
    auto m = [&](double r) { return std::abs(char_fn(inst.nu, inst.t * r)); };
    const auto [lhs, rhs] = spectral_moments(inst.sigma, m, n);
    CHECK(std::abs(report.lhs - lhs) < 1e-7);
    CHECK(std::abs(report.rhs - rhs) < 1e-7);
  }
}

TEST_CASE("difference density of a uniform weight is the tent") {
  const auto g = difference_density(WeightMeasure::uniform(0.0, 1.0), 64);
  CHECK(difference_density_is_exact(WeightMeasure::uniform(0.0, 1.0)));
  CHECK_FALSE(difference_density_is_exact(WeightMeasure::density(Triangular{0.0, 0.5, 1.0})));
  CHECK_FALSE(has_difference_density(cantor_thirds()));
  CHECK(g.reach() == doctest::Approx(1.0));
  for (double u : {-0.9, -0.31, 0.0, 0.5, 0.77}) {
    CHECK(g.pdf(u) == doctest::Approx(1.0 - std::abs(u)).epsilon(1e-12));
    CHECK(g.cdf(u) == doctest::Approx(u < 0 ? 0.5 * (1 + u) * (1 + u) : 1.0 - 0.5 * (1 - u) * (1 - u)).epsilon(1e-12));
  }
  CHECK(g.cdf(2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g.cdf(-2.0) == 0.0);
}

TEST_CASE("pair integral: constant correlation and concentrated weights") {
  const CorrelationModel one = BochnerCorrelation{make_spectral({{0.0, 1.0}})};
  for (const auto& nu : {WeightMeasure::uniform(0.0, 1.0), WeightMeasure::density(Triangular{0.0, 0.2, 3.0})}) {
    CHECK(std::abs(correlation_pair_integral_quadrature(one, nu, 17.0).value - 1.0) < 1e-12);
    CHECK(std::abs(correlation_pair_integral_sampled(one, nu, 17.0, 1000, 1).value - 1.0) < 1e-12);
  }

  SpikeProfile rho = geometric_spikes(10.0, 1.0, 1.0, 6, 0.2);
  for (double eps : {0.1, 0.01, 0.001}) {
    const auto nu = WeightMeasure::uniform(1.0 - eps, 1.0 + eps);
    // |r − s| has mean 2ε/3, and every difference stays inside the core bump
    CHECK(std::abs(correlation_pair_integral_quadrature(rho, nu, 1.0).value - (1.2 - 2.0 * eps / 3.0)) < 1e-9);
  }
  // wide differences: independent Simpson over the triangular law of r − s
  const double eps = 0.1, t = 100.0, w = 2.0 * eps;
  auto integrand = [&](double u) { return evaluate_correlation(rho, t * u) * (w - std::abs(u)) / (w * w); };
  double oracle = 0.0;
  const double knots[] = {-0.2, -0.11, -0.1, -0.09, -0.01, 0.0, 0.01, 0.09, 0.1, 0.11, 0.2};
  for (std::size_t k = 0; k + 1 < std::size(knots); ++k) oracle += simpson(integrand, knots[k], knots[k + 1], 2000);
  CHECK(std::abs(correlation_pair_integral_quadrature(rho, WeightMeasure::uniform(1.0 - eps, 1.0 + eps), t).value - oracle) < 1e-9);
}

TEST_CASE("pair integral: sampling and quadrature agree") {
  std::mt19937_64 gen(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto sq = make_box({0.5, 0.5});
  for (int k = 0; k < 20; ++k) {
    auto inst = random_instance(gen, true);
    CorrelationModel rho;
    switch (k % 3) {
      case 0: rho = geometric_spikes(4.0 + 10.0 * u(gen), 0.5 + u(gen), 0.5 * u(gen), 8, 0.1); break;
      case 1: rho = ClosedFormCorrelation{golden(), sq, sq}; break;
      default: rho = BochnerCorrelation{inst.sigma}; break;
    }
    const double t = 1.0 + 50.0 * u(gen);
    const auto q = correlation_pair_integral_quadrature(rho, inst.nu, t);
    const auto s = correlation_pair_integral_sampled(rho, inst.nu, t, 200000, 40 + k);
    CHECK(std::abs(q.value - s.value) <= 3.0 * std::hypot(q.error, s.error));
  }
}

TEST_CASE("Bochner bridge: pair integral equals the squared spectral norm") {
  std::mt19937_64 gen(404);
  for (int k = 0; k < 10; ++k) {
    const auto inst = random_instance(gen, true);
    const double l2 = l2_norm_spectral(inst.sigma, inst.nu, inst.t);
    const auto pair = correlation_pair_integral_quadrature(BochnerCorrelation{inst.sigma}, inst.nu, inst.t);
    CHECK(std::abs(pair.value - l2 * l2) < 1e-6);
  }
}

TEST_CASE("convergence_scan") {
  const auto grid = geometric_grid(10.0, 10.0, 4);
  const auto zero = convergence_scan([](double, std::uint64_t) { return PointResult{}; }, grid, 1);
  for (double v : zero.values) CHECK(v == 0.0);

  const Observable f = cosine_observable(2, 1);
  const auto nu = WeightMeasure::uniform(0.0, 1.0);
  auto eval = [&](double t, std::uint64_t seed) {
    const auto d = l1_deviation(golden(), f, nu, t, 500, 200, seed);
    return PointResult{d.value, d.std_error, {}};
  };
  CHECK(curve_csv(convergence_scan(eval, grid, 77)) == curve_csv(convergence_scan(eval, grid, 77)));
  CHECK(curve_csv(convergence_scan(eval, grid, 77)) != curve_csv(convergence_scan(eval, grid, 78)));

  auto flaky = [](double t, std::uint64_t) {
    if (t > 50.0 && t < 500.0) throw std::runtime_error("boom");
    return PointResult{1.0, 0.0, {}};
  };
  const auto curve = convergence_scan(flaky, grid, 1);
  CHECK(curve.failed[1]);
  CHECK(std::isnan(curve.values[1]));
  CHECK_FALSE(curve.failed[0]);
  CHECK(curve_csv(curve).find("100,nan,nan") != std::string::npos);
  CHECK(curve_csv(curve).rfind("t,value,error\n", 0) == 0);

  CHECK_THROWS(convergence_scan(eval, {10.0}, 1));
  CHECK_THROWS(convergence_scan(eval, {10.0, 10.0}, 1));
}

TEST_CASE("almost_mixing_probe") {
  const auto nu = WeightMeasure::uniform(0.0, 1.0);
  const auto grid = geometric_grid(10.0, 10.0, 5);
  SpikeProfile flat;
  flat.baseline = 0.3;
  flat.core_height = 0.0;
  flat.spikes = {{10.0, 1.0, 0.0}, {100.0, 1.0, 0.0}};
  for (double v : almost_mixing_probe(make_spike_profile(flat), nu, grid).values) CHECK(v < 1e-12);

  const auto sparse = almost_mixing_probe(geometric_spikes(10.0, 1.0, 1.0, 12), nu, grid);
  const auto dense = almost_mixing_probe(progression_spikes(5.0, 1.0, 1.0, 20001), nu, grid);
  CHECK(sparse.values.back() < 0.05 * sparse.values.front());
  CHECK(dense.values.back() > 0.5 * dense.values.front());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    // exact band mass of the tent law: P(|r−s| < 1/t)
    const double b = 1.0 / grid[k];
    CHECK(sparse.extras[k]["band_mass"].get<double>() == doctest::Approx(1.0 - (1.0 - b) * (1.0 - b)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(almost_mixing_probe(geometric_spikes(10.0, 1.0, 1.0, 3), WeightMeasure::point_mass(0.0), grid),
                  InvalidMeasure);
}
