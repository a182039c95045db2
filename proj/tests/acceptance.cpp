// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "ergavg/adversary.hpp"
#include "ergavg/averaging.hpp"
#include "ergavg/decay_curve.hpp"
#include "ergavg/presets.hpp"
#include "ergavg/rng.hpp"

using namespace ergavg;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;
constexpr ExecPolicy kExec{4};

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("violated: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

const TorusWinding& golden() {
  static const TorusWinding f = parse_flow("winding-golden");
  return f;
}

// ---------------------------------------------------------------------------
// 1: golden winding, √2 cos(2πx₂), uniform weight

Outcome criterion_1() {
  Outcome out;
  const FourierSeries f = cosine_observable(2, 1);
  const auto nu = WeightMeasure::uniform(0.0, 1.0);
  const std::array<double, 4> ts{10.0, 1e2, 1e3, 1e4};

  const auto start = std::chrono::steady_clock::now();
  const auto sigma = spectrum_of_observable(golden(), f);
  std::array<double, 4> l2{};
  for (std::size_t k = 0; k < ts.size(); ++k) l2[k] = l2_norm_spectral(sigma, nu, ts[k]);
  const double spectral_time = seconds_since(start);

  // oracle: the spectrum is ±2πα₂ with mass 1/2 each, so ‖P_t f‖₂ = |sin(πα₂t)/(πα₂t)|
  const double alpha = (std::sqrt(5.0) - 1.0) / 2.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double x = pi * alpha * ts[k];
    out.require(std::abs(l2[k] - std::abs(std::sin(x) / x)) < 1e-12, "spectral value matches sinc oracle at t=" + fmt(ts[k]));
    if (k > 0) out.require(l2[k] < l2[k - 1], "strictly decreasing at t=" + fmt(ts[k]));
  }
  out.require(l2[3] < 0.01, "l2 < 0.01 at t=1e4");
  out.require(spectral_time < 1.0, "spectral runtime < 1 s");
  out.note("l2: " + fmt(l2[0]) + " " + fmt(l2[1]) + " " + fmt(l2[2]) + " " + fmt(l2[3]) +
           " (spectral time " + fmt(spectral_time) + " s)");

  int bias_aware = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const auto d = l1_deviation(golden(), f, nu, ts[k], 10000, 10000, derive_seed(1, k), kExec);
    const bool strict = d.value <= l2[k] + 3.0 * d.std_error;
    if (d.value <= l2[k] + d.bias_bound + 3.0 * d.std_error) ++bias_aware;
    out.require(strict, "MC l1 <= l2 + 3 se at t=" + fmt(ts[k]));
    out.note("t=" + fmt(ts[k]) + " l1=" + fmt(d.value) + " se=" + fmt(d.std_error) + " inner bias bound=" +
             fmt(d.bias_bound) + " l2=" + fmt(l2[k]));
  }
  out.note("l1 <= l2 + bias bound + 3 se holds at " + std::to_string(bias_aware) + "/4 points");
  return out;
}

// ---------------------------------------------------------------------------
// 2: descent inequality

Outcome criterion_2() {
  Outcome out;
  const auto sigma = make_spectral({}, SpectralDensity{1.0, Uniform{0.0, 1.0}});
  const auto closed = holder_descent_check(sigma, [](double r) { return r; }, 2);
  out.require(std::abs(closed.lhs - 1.0 / 3.0) <= 1e-12, "closed-form lhs = 1/3");
  out.require(std::abs(closed.rhs - std::sqrt(1.0 / 5.0)) <= 1e-12, "closed-form rhs = sqrt(1/5)");

  std::mt19937_64 gen(20250);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int atomic = 0, continuous = 0, mixed = 0, failures = 0;
  double worst = -1.0;
  for (int k = 0; k < 200; ++k) {
    const int kind = k % 3;
    std::vector<SpectralAtom> atoms;
    std::optional<SpectralDensity> ac;
    double remaining = 1.0;
    if (kind != 0) {
      const double lo = -5.0 + 6.0 * u(gen);
      const double mass = kind == 1 ? 1.0 : 0.2 + 0.6 * u(gen);
      const Density shape = u(gen) < 0.5 ? Density{Uniform{lo, lo + 0.2 + 3.0 * u(gen)}}
                                         : Density{Triangular{lo, lo + u(gen), lo + 1.0 + 2.0 * u(gen)}};
      ac = SpectralDensity{mass, shape};
      remaining -= mass;
    }
    if (kind != 1) {
      const int n_atoms = 1 + static_cast<int>(u(gen) * 4.0);
      for (int a = 0; a < n_atoms; ++a) {
        const double m = a + 1 == n_atoms ? remaining : remaining * (0.1 + 0.8 * u(gen));
        atoms.push_back({-10.0 + 20.0 * u(gen), m});
        remaining -= m;
      }
    }
    (kind == 0 ? atomic : kind == 1 ? continuous : mixed)++;
    const int which = static_cast<int>(u(gen) * 4.0);
    const WeightMeasure nu = which == 0   ? WeightMeasure::uniform(0.0, 0.5 + u(gen))
                             : which == 1 ? WeightMeasure::density(Triangular{0.0, u(gen), 1.0})
                             : which == 2 ? WeightMeasure::density(TruncatedGaussian{0.5, 0.1 + 0.3 * u(gen), 0.0, 1.0})
                                          : cantor_thirds();
    const double t = std::exp(std::log(0.1) + u(gen) * std::log(1000.0));
    const int n = std::array{2, 3, 5}[(k / 3) % 3];
    const auto r = holder_descent_check(make_spectral(atoms, ac), nu, t, n);
    worst = std::max(worst, r.lhs - r.rhs);
    if (!(r.pass && r.lhs <= r.rhs + 1e-9)) ++failures;
  }
  out.require(failures == 0, std::to_string(failures) + " of 200 random instances");
  out.note("instances: " + std::to_string(atomic) + " atomic, " + std::to_string(continuous) + " continuous, " +
           std::to_string(mixed) + " mixed; max lhs-rhs " + fmt(worst));
  return out;
}

// ---------------------------------------------------------------------------
// 3: convolution algebra

WeightMeasure random_measure(std::mt19937_64& gen, int depth = 0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int which = static_cast<int>(u(gen) * (depth == 0 ? 8.0 : 6.0));
  switch (which) {
    case 0: {
      const double lo = -1.0 + 2.0 * u(gen);
      return WeightMeasure::uniform(lo, lo + 0.1 + u(gen));
    }
    case 1: return WeightMeasure::density(Triangular{0.0, 0.1 + 0.8 * u(gen), 1.0});
    case 2: return WeightMeasure::density(TruncatedGaussian{0.0, 0.2 + u(gen), -1.0 - u(gen), 1.0 + u(gen)});
    case 3: {
      PiecewiseConstant p{0.0, 1.0 + u(gen), {}};
      double total = 0.0;
      for (int k = 0; k < 7; ++k) total += p.masses.emplace_back(0.05 + u(gen));
      for (double& m : p.masses) m /= total;
      return WeightMeasure::density(p);
    }
    case 4: {
      const double r = 0.1 + 0.35 * u(gen);
      return WeightMeasure::self_similar(SelfSimilar{{r, r}, {0.0, 1.0 - r}, {0.5, 0.5}});
    }
    case 5: return u(gen) < 0.5 ? dyadic_odd() : cantor_thirds();
    case 6: return scale(random_measure(gen, depth + 1), 0.5 + 3.0 * u(gen));
    default: {
      const auto a = random_measure(gen, depth + 1);
      return convolve(a, random_measure(gen, depth + 1));
    }
  }
}

std::string criterion_3_csv(Outcome& out, const ExecPolicy& exec) {
  std::mt19937_64 gen(30303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<WeightMeasure> nus, mus;
  std::vector<std::vector<double>> freqs(20);
  for (int k = 0; k < 20; ++k) {
    nus.push_back(random_measure(gen));
    mus.push_back(random_measure(gen));
    for (int j = 0; j < 50; ++j) freqs[k].push_back(-200.0 + 400.0 * u(gen));
  }
  std::vector<double> worst(20, 0.0);
  for_each_block(20, exec, [&](std::size_t k) {
    const auto conv = convolve(nus[k], mus[k]);
    for (double xi : freqs[k])
      worst[k] = std::max(worst[k], std::abs(char_fn(conv, xi) - char_fn(nus[k], xi) * char_fn(mus[k], xi)));
  });
  const double max_err = *std::max_element(worst.begin(), worst.end());
  out.require(max_err <= 1e-9, "char fn product to 1e-9 (max " + fmt(max_err) + ")");

  // grid oracle: direct discrete convolution of equal cell masses, each pair
  // split evenly between cells i+j and i+j+1
  const std::size_t n = 1u << 12;
  const double h = 1.0 / n;
  const auto lib = grid_masses(convolve(WeightMeasure::uniform(0.0, 1.0), WeightMeasure::uniform(0.0, 1.0)), h);
  std::vector<double> oracle(2 * n, 0.0);
  for (std::size_t k = 0; k + 1 < 2 * n; ++k) {
    const double pairs = static_cast<double>(std::min(k, 2 * n - 2 - k) + 1);
    oracle[k] += 0.5 * pairs * h * h;
    oracle[k + 1] += 0.5 * pairs * h * h;
  }
  auto tri_cdf = [](double x) { return x <= 1.0 ? 0.5 * x * x : 1.0 - 0.5 * (2.0 - x) * (2.0 - x); };
  double l1_oracle = 0.0, l1_triangle = 0.0;
  for (std::size_t k = 0; k < 2 * n; ++k) {
    const std::int64_t cell = static_cast<std::int64_t>(k) - lib.first_cell;
    const double m = cell >= 0 && cell < static_cast<std::int64_t>(lib.masses.size()) ? lib.masses[cell] : 0.0;
    l1_oracle += std::abs(m - oracle[k]);
    l1_triangle += std::abs(oracle[k] - (tri_cdf((k + 1) * h) - tri_cdf(k * h)));
  }
  out.require(l1_oracle < 1e-3, "grid masses vs oracle L1 < 1e-3");
  out.require(l1_triangle < 1e-3, "oracle vs triangular density L1 < 1e-3");
  out.note("max |char fn error| " + fmt(max_err) + "; L1 lib-oracle " + fmt(l1_oracle) + ", oracle-triangle " + fmt(l1_triangle));

  std::ostringstream csv;
  csv << "pair,max_error\n";
  for (std::size_t k = 0; k < worst.size(); ++k) csv << k << ',' << format_number(worst[k]) << '\n';
  return csv.str();
}

// ---------------------------------------------------------------------------
// 4: pair integral, sampled vs quadrature, and the Bochner bridge

SpectralModel random_spectral(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double lo = -3.0 + 4.0 * u(gen);
  const double mass = 0.2 + 0.6 * u(gen);
  const double atom = 1.0 - mass;
  return make_spectral({{-8.0 + 16.0 * u(gen), atom * 0.5}, {-8.0 + 16.0 * u(gen), atom * 0.5}},
                       SpectralDensity{mass, Uniform{lo, lo + 0.3 + 2.0 * u(gen)}});
}

WeightMeasure random_density(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (static_cast<int>(u(gen) * 4.0)) {
    case 0: return WeightMeasure::uniform(0.0, 0.5 + u(gen));
    case 1: return WeightMeasure::density(Triangular{0.0, u(gen), 1.0});
    case 2: return WeightMeasure::density(TruncatedGaussian{0.5, 0.1 + 0.3 * u(gen), 0.0, 1.0});
    default: return scale(WeightMeasure::uniform(1.0, 2.0), 0.2 + u(gen));
  }
}

std::string criterion_4_csv(Outcome& out, const ExecPolicy& exec) {
  std::mt19937_64 gen(40404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto sq = make_box({0.5, 0.5});
  std::ostringstream csv;
  csv << "instance,quadrature,quadrature_error,sampled,sampled_error\n";
  int misses = 0;
  double worst_z = 0.0;
  for (int k = 0; k < 50; ++k) {
    CorrelationModel rho;
    switch (k % 4) {
      case 0: rho = geometric_spikes(4.0 + 10.0 * u(gen), 0.5 + u(gen), 0.5 * u(gen), 8, 0.1); break;
      case 1: rho = progression_spikes(3.0 + 5.0 * u(gen), 0.5 + u(gen), 0.5 * u(gen), 200, 0.1); break;
      case 2: rho = ClosedFormCorrelation{golden(), sq, sq}; break;
      default: rho = BochnerCorrelation{random_spectral(gen)}; break;
    }
    const auto nu = random_density(gen);
    const double t = 1.0 + 100.0 * u(gen);
    const auto q = correlation_pair_integral_quadrature(rho, nu, t);
    const auto s = correlation_pair_integral_sampled(rho, nu, t, 200000, derive_seed(4, k), exec);
    const double z = std::abs(q.value - s.value) / std::hypot(q.error, s.error);
    worst_z = std::max(worst_z, z);
    if (!(z <= 3.0)) ++misses;
    csv << k << ',' << format_number(q.value) << ',' << format_number(q.error) << ',' << format_number(s.value) << ','
        << format_number(s.error) << '\n';
  }
  out.require(misses == 0, std::to_string(misses) + " of 50 sampled/quadrature pairs beyond 3 combined errors");

  double worst_bridge = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto sigma = random_spectral(gen);
    const auto nu = random_density(gen);
    const double t = std::exp(std::log(0.1) + u(gen) * std::log(1000.0));
    const double l2 = l2_norm_spectral(sigma, nu, t);
    const auto pair = correlation_pair_integral_quadrature(BochnerCorrelation{sigma}, nu, t);
    worst_bridge = std::max(worst_bridge, std::abs(pair.value - l2 * l2));
  }
  out.require(worst_bridge <= 1e-6, "Bochner bridge to 1e-6");
  out.note("max |z| " + fmt(worst_z) + "; max bridge error " + fmt(worst_bridge));
  return csv.str();
}

// ---------------------------------------------------------------------------
// 5: almost-mixing probe

Outcome criterion_5() {
  Outcome out;
  const auto grid = geometric_grid(10.0, 10.0, 5);
  const auto nu = WeightMeasure::uniform(0.0, 1.0);
  ProbeOptions opt;
  opt.exec = kExec;
  const auto geo = almost_mixing_probe(parse_spike_profile("spike(10,1,1)"), nu, grid, opt);
  const auto arith = almost_mixing_probe(parse_spike_profile("progression(5,1,1,20001)"), nu, grid, opt);
  for (const auto* c : {&geo, &arith})
    out.require(std::none_of(c->failed.begin(), c->failed.end(), [](bool b) { return b; }), "no failed grid points");
  out.require(geo.values.back() < 0.05 * geo.values.front(), "geometric spikes: final < 0.05 initial");
  out.require(arith.values.back() > 0.5 * arith.values.front(), "progression spikes: final > 0.5 initial");
  out.note("geometric " + fmt(geo.values.front()) + " -> " + fmt(geo.values.back()) + "; progression " +
           fmt(arith.values.front()) + " -> " + fmt(arith.values.back()));
  return out;
}

// ---------------------------------------------------------------------------
// 6: adversarial nested measure

Outcome criterion_6() {
  Outcome out;
  const auto plan = build_adversarial_measure(golden(), make_box({0.5, 0.5}), 4);
  const auto check = check_plan(plan);
  out.require(plan.depth() == 4, "depth 4 reached");
  out.require(check.ok, "plan invariants");
  for (const auto& v : check.violations) out.note(v);
  const auto report = verify_non_almost_mixing(plan, 100000, 1, kExec);
  for (const auto& r : report) {
    const int n = r.level;
    const std::string lv = "level " + std::to_string(n);
    out.require(r.estimate >= 0.25 - 1.0 / n - std::ldexp(1.0, 1 - n) - 3.0 * r.std_error, lv + " lower bound");
    if (n >= 2) out.require(r.estimate > 0.0625, lv + " exceeds 1/16");
    out.require(std::abs(r.estimate - r.quadrature) <= 3.0 * r.std_error, lv + " MC vs quadrature");
    out.note(lv + ": s=" + to_decimal(r.s) + " estimate " + fmt(r.estimate) + " +- " + fmt(r.std_error) +
             " quadrature " + fmt(r.quadrature));
  }
  return out;
}

// ---------------------------------------------------------------------------
// 7: Cantor weight against an atom at 2π

Outcome criterion_7() {
  Outcome out;
  const auto sigma = make_spectral({{2.0 * pi, 1.0}});
  const auto nu = cantor_thirds();
  std::string values;
  double lowest = 1.0;
  for (int k = 0; k < 12; ++k) {
    const double t = std::pow(3.0, k);
    const double v = l2_norm_spectral(sigma, nu, t);
    // |ν̂(ξ)| = Π_{j≥1} |cos(ξ/3^j)|; at ξ = 2π·3^k the first k factors are 1
    long double oracle = 1.0L;
    for (int m = 1; m <= 60; ++m) oracle *= std::cos(2.0L * std::numbers::pi_v<long double> / std::pow(3.0L, m));
    out.require(std::abs(v - static_cast<double>(std::abs(oracle))) <= 1e-8, "oracle at t=3^" + std::to_string(k));
    lowest = std::min(lowest, v);
    values += (k ? " " : "") + fmt(v);
  }
  const double uniform_far = l2_norm_spectral(sigma, WeightMeasure::uniform(0.0, 1.0), std::pow(3.0, 11) + 0.5);
  out.note("values along t=3^k, k=0..11: " + values);
  out.note("min " + fmt(lowest) + " vs uniform weight at t=3^11+1/2: " + fmt(uniform_far));
  return out;
}

// ---------------------------------------------------------------------------
// 8: thread-count independence

int run_cli(const std::string& args) {
  const int raw = std::system((std::string(ERGAVG_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) { return fs::exists(p) ? read_text_file(p.string()) : std::string{}; }

Outcome criterion_8() {
  Outcome out;
  const fs::path dir = fs::temp_directory_path() / ("ergavg_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(ERGAVG_CONFIG_DIR))
    if (e.path().extension() == ".json") configs.push_back(e.path());
  std::sort(configs.begin(), configs.end());
  for (const auto& cfg : configs) {
    const std::string stem = cfg.stem().string();
    const fs::path p1 = dir / (stem + "_1"), p4 = dir / (stem + "_4");
    const int s1 = run_cli("run " + cfg.string() + " --out " + p1.string() + " --threads 1");
    const int s4 = run_cli("run " + cfg.string() + " --out " + p4.string() + " --threads 4");
    out.require(s1 == 0 && s4 == 0, stem + " exits 0");
    const std::string a = slurp(p1.string() + ".csv"), b = slurp(p4.string() + ".csv");
    out.require(!a.empty() && a == b, stem + " CSV identical for 1 and 4 threads");
  }
  Outcome scratch;
  out.require(criterion_3_csv(scratch, ExecPolicy{1}) == criterion_3_csv(scratch, ExecPolicy{4}),
              "convolution-algebra CSV identical");
  out.require(criterion_4_csv(scratch, ExecPolicy{1}) == criterion_4_csv(scratch, ExecPolicy{4}),
              "pair-integral CSV identical");
  out.note(std::to_string(configs.size()) + " CLI configs plus 2 in-process runs compared");
  std::error_code ec;
  fs::remove_all(dir, ec);
  return out;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double budget;
  };
  const std::vector<Entry> entries{
      {1, "L2 decay on the golden winding", criterion_1, 0.0},
      {2, "descent inequality", criterion_2, 10.0},
      {3, "convolution algebra", [] { Outcome o; criterion_3_csv(o, kExec); return o; }, 30.0},
      {4, "pair integral consistency", [] { Outcome o; criterion_4_csv(o, kExec); return o; }, 60.0},
      {5, "almost-mixing probe", criterion_5, 60.0},
      {6, "adversarial nested measure", criterion_6, 120.0},
      {7, "Cantor weight against an atom", criterion_7, 0.0},
      {8, "thread-count independence", criterion_8, 0.0},
  };
  bool all = true;
  for (const auto& e : entries) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.note(std::string("exception: ") + ex.what());
    }
    const double elapsed = seconds_since(start);
    if (e.budget > 0.0 && elapsed >= e.budget) {
      o.pass = false;
      o.note("runtime " + fmt(elapsed) + " s over budget " + fmt(e.budget) + " s");
    }
    all = all && o.pass;
    std::printf("criterion %d: %s  %s (%.2f s)\n", e.id, o.pass ? "PASS" : "FAIL", e.name, elapsed);
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
