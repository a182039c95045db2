#include "ergavg/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ergavg/errors.hpp"
#include "ergavg/measure_io.hpp"
#include "ergavg/rng.hpp"

namespace ergavg {
namespace {

using i128 = __int128;

constexpr std::int64_t kMultiplierCap = std::int64_t{1} << 30;

const ContinuedFraction& require_slope(const TorusWinding& flow, std::optional<ContinuedFraction>& cache) {
  if (flow.dimension() != 2 || !flow.slope)
    throw std::invalid_argument("adversary: need a two-dimensional winding with an exact slope");
  if (!cache) cache.emplace(*flow.slope);
  return *cache;
}

// Convergent q_i (1-based); a terminating expansion repeats its last
// convergent, whose displacement is exactly zero.
Convergent convergent_at(const ContinuedFraction& cf, std::size_t i) {
  if (i == 0) throw std::invalid_argument("convergent index is 1-based");
  const auto all = cf.convergents(i + 1);
  return all.size() > i ? all[i] : all.back();
}

double center_correlation(const BoxSet& a, long double k_times_e) {
  const double phases[2] = {0.0, static_cast<double>(frac(k_times_e))};
  return box_correlation_at_phases(a, a, phases);
}

double membership(const BoxSet& a, const double* y) {
  for (std::size_t j = 0; j < a.arcs.size(); ++j)
    if (!(y[j] < a.arcs[j])) return 0.0;
  return 1.0;
}

struct LevelMoments {
  double n = 0.0;
  double hits = 0.0;
  double good = 0.0;
};

}  // namespace

std::string to_decimal(u128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

double correlation_lipschitz(const TorusWinding& flow) { return 1.0 + flow.l1_norm(); }

std::int64_t multiplier_for_budget(const TorusWinding& flow, std::size_t i, double epsilon) {
  std::optional<ContinuedFraction> cache;
  const Convergent c = convergent_at(require_slope(flow, cache), i);
  const long double e = std::abs(c.error);
  if (e == 0.0L) return kMultiplierCap;
  const long double m = std::floor(static_cast<long double>(epsilon) / e);
  return static_cast<std::int64_t>(std::min<long double>(m, kMultiplierCap));
}

std::int64_t choose_multiplier(const TorusWinding& flow, const BoxSet& a, std::size_t i) {
  if (a.arcs.size() != flow.dimension()) throw std::invalid_argument("choose_multiplier: box dimension mismatch");
  std::optional<ContinuedFraction> cache;
  const Convergent c = convergent_at(require_slope(flow, cache), i);
  const long double e = std::abs(c.error);
  if (e == 0.0L) return kMultiplierCap;
  const long double m = std::floor(std::sqrt(e) / e);
  return static_cast<std::int64_t>(std::min<long double>(m, kMultiplierCap));
}

double delta_from_deviation(double deviation, int n, double lipschitz) {
  if (n < 1) throw std::invalid_argument("choose_delta: level must be at least 1");
  const double tol = 1.0 / n;
  if (deviation > 0.5 * tol)
    throw InfeasibleLevel("center deviation " + std::to_string(deviation) + " exceeds 1/(2n) at level " +
                          std::to_string(n));
  // Any dyadic search over the certificate |corr(t+u) − corr(t)| ≤ L|u|
  // converges to this value.
  return (tol - deviation) / lipschitz;
}

double choose_delta(const TorusWinding& flow, const BoxSet& a, double t_center, int n) {
  const double dev = std::abs(arc_correlation(flow, a, a, t_center) - a.measure());
  return delta_from_deviation(dev, n, correlation_lipschitz(flow));
}

AdversaryPlan build_adversarial_measure(const TorusWinding& flow, const BoxSet& a, int n_max,
                                        const AdversaryOptions& options) {
  if (n_max < 0) throw std::invalid_argument("adversary: depth must be nonnegative");
  if (a.arcs.size() != flow.dimension()) throw std::invalid_argument("adversary: box dimension mismatch");
  std::optional<ContinuedFraction> cache;
  const ContinuedFraction& cf = require_slope(flow, cache);

  AdversaryPlan plan{flow, a, n_max, {}, std::nullopt, {}, NestedIntervals{}};
  const double lipschitz = correlation_lipschitz(flow);
  const double mu = a.measure();

  struct Parent {
    std::int64_t k;
    std::int64_t m;
  };
  std::vector<Parent> parents{{1, 2}};
  long double parent_half = 0.5L;
  std::size_t last_index = 0;
  u128 last_s = 0;

  for (int n = 1; n <= n_max; ++n) {
    try {
      const long double epsilon = 1.0L / (2.0L * n * lipschitz);
      const long double need = std::ceil(3.0L / (2.0L * parent_half));
      if (need > static_cast<long double>(std::int64_t{1} << 62)) throw PrecisionError("adversary: multiplier overflow");
      const auto m_need = static_cast<std::int64_t>(need);
      bool placed = false;
      for (std::size_t i = last_index + 1; i <= options.max_index && !placed; ++i) {
        const Convergent c = convergent_at(cf, i);
        const long double e = std::abs(c.error);
        std::int64_t m = 0;
        if (options.rule == MultiplierRule::LevelBudget) {
          const long double m_max = e == 0.0L ? static_cast<long double>(kMultiplierCap) : std::floor(epsilon / e);
          if (m_max < static_cast<long double>(m_need)) continue;
          m = m_need;
        } else {
          m = e == 0.0L ? kMultiplierCap
                        : static_cast<std::int64_t>(std::min<long double>(std::floor(std::sqrt(e) / e), kMultiplierCap));
          if (m < m_need) continue;
        }
        const u128 s = static_cast<u128>(m) * static_cast<u128>(c.q);
        if (s <= last_s) continue;
        if (s >> 126) throw PrecisionError("adversary: scale s exceeds 128-bit range");

        LevelRecord rec;
        rec.level = n;
        rec.index = i;
        rec.q = c.q;
        rec.displacement = c.error;
        rec.m = m;
        rec.s = s;
        bool ok = true;
        for (const Parent& par : parents) {
          // p = ⌈m·a + 1/4⌉ with a = K/M − parent_half, split into integer and fractional parts
          const i128 x = static_cast<i128>(m) * par.k;
          const i128 quot = x / par.m;
          const i128 rem = x % par.m;
          const long double frac_part = static_cast<long double>(rem) / static_cast<long double>(par.m);
          const auto p = static_cast<std::int64_t>(quot) +
                         static_cast<std::int64_t>(std::ceil(frac_part - static_cast<long double>(m) * parent_half + 0.25L));
          for (std::int64_t k : {p, p + 1}) {
            const double dev = std::abs(center_correlation(a, static_cast<long double>(k) * c.error) - mu);
            if (dev > 0.5 / n) ok = false;
            rec.k.push_back(k);
            rec.center_deviation.push_back(dev);
          }
          if (!ok) break;
        }
        if (!ok) continue;
        double delta = std::numeric_limits<double>::infinity();
        for (double dev : rec.center_deviation) delta = std::min(delta, delta_from_deviation(dev, n, lipschitz));
        rec.delta = delta;
        const long double half =
            std::min(static_cast<long double>(delta) / static_cast<long double>(s), 0.25L / static_cast<long double>(m));
        rec.half_width = static_cast<double>(half);

        std::vector<NestedNode> nodes;
        for (std::size_t j = 0; j < rec.k.size(); ++j) {
          const Parent& par = parents[j / 2];
          const i128 num = static_cast<i128>(rec.k[j]) * par.m - static_cast<i128>(par.k) * m;
          const long double offset = static_cast<long double>(num) / (static_cast<long double>(m) * par.m);
          if (std::abs(offset) + half > parent_half) ok = false;
          nodes.push_back({static_cast<double>(offset), rec.half_width});
        }
        if (!ok) continue;

        plan.tree.levels.push_back(std::move(nodes));
        std::vector<Parent> next;
        for (std::int64_t k : rec.k) next.push_back({k, m});
        parents = std::move(next);
        parent_half = rec.half_width;
        last_index = i;
        last_s = s;
        plan.levels.push_back(std::move(rec));
        placed = true;
      }
      if (!placed)
        throw InfeasibleLevel("no rigidity index up to " + std::to_string(options.max_index) + " fits level " +
                              std::to_string(n));
    } catch (const PrecisionError& e) {
      plan.failed_level = n;
      plan.failure = e.what();
      break;
    } catch (const InfeasibleLevel& e) {
      plan.failed_level = n;
      plan.failure = e.what();
      break;
    }
  }
  return plan;
}

PlanCheck check_plan(const AdversaryPlan& plan) {
  PlanCheck out;
  auto fail = [&](const std::string& msg) {
    out.ok = false;
    out.violations.push_back(msg);
  };
  const double mu = plan.box.measure();
  const auto& tree = plan.tree;
  if (tree.depth() != plan.levels.size()) fail("tree depth differs from the number of level records");
  if (std::abs(tree.root_center - 0.5) > 0.0 || std::abs(tree.root_half_width - 0.5) > 0.0) fail("root is not [0,1]");
  u128 prev_s = 0;
  std::vector<std::int64_t> parent_k{1};
  std::int64_t parent_m = 2;
  double parent_half = 0.5;
  for (std::size_t l = 0; l < plan.levels.size() && l < tree.depth(); ++l) {
    const LevelRecord& rec = plan.levels[l];
    const auto& nodes = tree.levels[l];
    const int n = rec.level;
    const std::string at = "level " + std::to_string(n) + ": ";
    if (n != static_cast<int>(l) + 1) fail(at + "level numbering");
    if (rec.s != static_cast<u128>(rec.m) * static_cast<u128>(rec.q)) fail(at + "s != m*q");
    if (rec.s <= prev_s) fail(at + "s not strictly increasing");
    prev_s = rec.s;
    const std::size_t count = std::size_t{1} << n;
    if (nodes.size() != count || rec.k.size() != count) {
      fail(at + "expected 2^n intervals");
      break;
    }
    // masses through the measure's CDF, where the interval is resolvable in absolute coordinates
    if (rec.half_width > 1e-9) {
      const WeightMeasure nu = plan.measure();
      for (std::size_t j = 0; j < count; ++j) {
        const double c = tree.center(static_cast<std::size_t>(n), j);
        const double mass = cdf(nu, c + rec.half_width) - cdf(nu, c - rec.half_width);
        if (std::abs(mass - std::ldexp(1.0, -n)) > 1e-12) fail(at + "interval mass is not 2^-n");
      }
    }
    for (std::size_t j = 0; j < count; ++j) {
      const std::int64_t k = rec.k[j];
      if (j % 2 == 0 && (!(k + 1 < rec.m) || k < 1)) fail(at + "p outside 1 <= p, p+1 < m");
      if (j % 2 == 1 && k != rec.k[j - 1] + 1) fail(at + "siblings are not p, p+1");
      const i128 num = static_cast<i128>(k) * parent_m - static_cast<i128>(parent_k[j / 2]) * rec.m;
      const long double offset = static_cast<long double>(num) / (static_cast<long double>(rec.m) * parent_m);
      if (std::abs(static_cast<long double>(nodes[j].offset) - offset) > 1e-15L * std::abs(offset) + 1e-300L)
        fail(at + "stored center differs from k/m");
      if (nodes[j].half_width != rec.half_width) fail(at + "widths not equalized");
      if (std::abs(offset) + nodes[j].half_width > parent_half * (1.0 + 1e-12)) fail(at + "interval leaves its parent");
      if (j % 2 == 1 && !(nodes[j - 1].offset + nodes[j - 1].half_width < nodes[j].offset - nodes[j].half_width))
        fail(at + "siblings overlap");
      const double dev = std::abs(center_correlation(plan.box, static_cast<long double>(k) * rec.displacement) - mu);
      if (!(dev < 1.0 / n)) fail(at + "midpoint correlation not within 1/n of mu(A)");
      if (dev + correlation_lipschitz(plan.flow) * rec.half_width * static_cast<double>(rec.s) > 1.0 / n * (1.0 + 1e-9))
        fail(at + "tolerance width exceeds the 1/n certificate");
    }
    // level-1 intervals inside [0,1]
    if (n == 1)
      for (const auto& node : nodes)
        if (0.5 + node.offset - node.half_width < 0.0 || 0.5 + node.offset + node.half_width > 1.0)
          fail(at + "interval outside [0,1]");
    parent_k = rec.k;
    parent_m = rec.m;
    parent_half = rec.half_width;
  }
  // every leaf (mass 2^-D) lies inside each of its ancestors, so each level-n
  // interval holds exactly its 2^(D-n) descendant leaves
  const std::size_t depth = std::min(tree.depth(), plan.levels.size());
  if (out.ok && depth > 0) {
    const double leaf_half = tree.levels[depth - 1].front().half_width;
    for (std::size_t leaf = 0; leaf < (std::size_t{1} << depth); ++leaf) {
      long double rel = 0.0L;
      for (std::size_t l = depth; l-- > 0;) {
        const double w = tree.levels[l][leaf >> (depth - 1 - l)].half_width;
        if (std::abs(rel) + leaf_half > w * (1.0L + 1e-12L)) fail("leaf " + std::to_string(leaf) + " escapes its level-" + std::to_string(l + 1) + " ancestor");
        rel += tree.levels[l][leaf >> (depth - 1 - l)].offset;
      }
    }
  }
  return out;
}

std::vector<LevelReport> verify_non_almost_mixing(const AdversaryPlan& plan, std::size_t n_samples,
                                                  std::uint64_t seed, const ExecPolicy& exec) {
  const std::size_t depth = plan.depth();
  std::vector<LevelReport> out;
  if (depth == 0) return out;
  if (n_samples < 2) throw std::invalid_argument("verify_non_almost_mixing: need at least two samples");
  const BoxSet& box = plan.box;
  const double mu = box.measure();
  const long double alpha2 = ContinuedFraction(*plan.flow.slope).value();
  const auto& tree = plan.tree;
  const double leaf_half = plan.levels.back().half_width;

  std::vector<long double> scale(depth);
  for (std::size_t l = 0; l < depth; ++l) scale[l] = static_cast<long double>(plan.levels[l].s);

  // Displacement of the time s_n·r from the integer time k·q_n, per coordinate.
  auto phases_at = [&](std::size_t l, std::size_t node, long double residual, double* phase) {
    const LevelRecord& rec = plan.levels[l];
    const long double shift = scale[l] * residual;
    phase[0] = static_cast<double>(frac(shift));
    phase[1] = static_cast<double>(frac(static_cast<long double>(rec.k[node]) * rec.displacement + shift * alpha2));
  };

  // Monte Carlo over (r, x).
  const std::uint64_t seed_r = derive_seed(seed, 0);
  const std::uint64_t seed_x = derive_seed(seed, 1);
  const std::size_t blocks = block_count(n_samples);
  std::vector<std::vector<LevelMoments>> parts(blocks, std::vector<LevelMoments>(depth));
  for_each_block(blocks, exec, [&](std::size_t b) {
    const std::size_t first = b * kMonteCarloBlock;
    const std::size_t last = std::min(n_samples, first + kMonteCarloBlock);
    std::vector<std::size_t> path(depth);
    std::vector<long double> residual(depth);
    for (std::size_t j = first; j < last; ++j) {
      CounterRng rng(derive_seed(seed_r, j));
      std::size_t idx = 0;
      for (std::size_t l = 0; l < depth; ++l) {
        idx = 2 * idx + (rng.next() >> 63);
        path[l] = idx;
      }
      long double rest = static_cast<long double>(leaf_half) * (2.0L * rng.uniform() - 1.0L);
      for (std::size_t l = depth; l-- > 0;) {
        residual[l] = rest;
        rest += tree.levels[l][path[l]].offset;
      }
      CounterRng xr(derive_seed(seed_x, j));
      double x[2] = {xr.uniform(), xr.uniform()};
      const double in_a = membership(box, x);
      for (std::size_t l = 0; l < depth; ++l) {
        double phase[2];
        phases_at(l, path[l], residual[l], phase);
        double y[2] = {frac(x[0] + phase[0]), frac(x[1] + phase[1])};
        LevelMoments& acc = parts[b][l];
        acc.n += 1.0;
        acc.hits += in_a * membership(box, y);
        const double corr = box_correlation_at_phases(box, box, phase);
        if (std::abs(corr - mu) < 1.0 / static_cast<double>(l + 1)) acc.good += 1.0;
      }
    }
  });
  std::vector<LevelMoments> total(depth);
  for (const auto& part : parts)
    for (std::size_t l = 0; l < depth; ++l) {
      total[l].n += part[l].n;
      total[l].hits += part[l].hits;
      total[l].good += part[l].good;
    }

  // Exact integration over each leaf: the correlation is piecewise quadratic
  // in the position inside the leaf, with kinks where a phase crosses an arc end.
  static const double node = std::sqrt(0.6);
  const std::size_t leaves = std::size_t{1} << depth;
  std::vector<double> kink_phases{0.0};
  for (double arc : box.arcs) {
    kink_phases.push_back(arc);
    kink_phases.push_back(1.0 - arc);
  }
  for (std::size_t l = 0; l < depth; ++l) {
    long double sum = 0.0L;
    for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
      long double center = 0.0L;
      for (std::size_t deeper = depth; deeper-- > l + 1;)
        center += tree.levels[deeper][leaf >> (depth - 1 - deeper)].offset;
      const std::size_t nd = leaf >> (depth - 1 - l);
      const long double speeds[2] = {scale[l], scale[l] * alpha2};
      double base[2];
      phases_at(l, nd, center, base);
      std::vector<long double> knots{-static_cast<long double>(leaf_half), static_cast<long double>(leaf_half)};
      for (int c = 0; c < 2; ++c) {
        const long double lo = base[c] - speeds[c] * leaf_half;
        const long double hi = base[c] + speeds[c] * leaf_half;
        if (hi - lo > 1e6L) throw AccuracyError("adversary quadrature: too many kinks", static_cast<double>(hi - lo));
        for (double kappa : kink_phases)
          for (long double z = std::ceil(lo - kappa); z <= hi - kappa; z += 1.0L) knots.push_back((z + kappa - base[c]) / speeds[c]);
      }
      std::sort(knots.begin(), knots.end());
      auto corr = [&](long double v) {
        double phase[2];
        for (int c = 0; c < 2; ++c) phase[c] = static_cast<double>(frac(static_cast<long double>(base[c]) + speeds[c] * v));
        return box_correlation_at_phases(box, box, phase);
      };
      long double integral = 0.0L;
      for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const long double lo = std::max(knots[k], -static_cast<long double>(leaf_half));
        const long double hi = std::min(knots[k + 1], static_cast<long double>(leaf_half));
        if (!(hi > lo)) continue;
        const long double mid = 0.5L * (lo + hi), half = 0.5L * (hi - lo);
        integral += half * (5.0L / 9.0L * corr(mid - half * node) + 8.0L / 9.0L * corr(mid) + 5.0L / 9.0L * corr(mid + half * node));
      }
      sum += integral / (2.0L * leaf_half);
    }
    LevelReport r;
    r.level = plan.levels[l].level;
    r.s = plan.levels[l].s;
    r.estimate = total[l].hits / total[l].n;
    r.std_error = std::sqrt(std::max(0.0, r.estimate * (1.0 - r.estimate)) / total[l].n);
    r.quadrature = static_cast<double>(sum / static_cast<long double>(leaves));
    r.target = mu;
    r.mixing = mu * mu;
    r.good_mass = total[l].good / total[l].n;
    out.push_back(r);
  }
  return out;
}

nlohmann::json plan_to_json(const AdversaryPlan& plan) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& rec : plan.levels) {
    levels.push_back({{"level", rec.level},
                      {"index", rec.index},
                      {"q", rec.q},
                      {"displacement", static_cast<double>(rec.displacement)},
                      {"m", rec.m},
                      {"s", to_decimal(rec.s)},
                      {"delta", rec.delta},
                      {"half_width", rec.half_width},
                      {"k", rec.k},
                      {"center_deviation", rec.center_deviation}});
  }
  nlohmann::json doc = {{"flow", {{"name", plan.flow.name}, {"alpha", plan.flow.alpha}}},
                        {"box", plan.box.arcs},
                        {"requested_depth", plan.requested_depth},
                        {"levels", std::move(levels)},
                        {"measure", to_json(plan.measure())}};
  if (plan.flow.slope) doc["flow"]["slope"] = {{"p", plan.flow.slope->p}, {"d", plan.flow.slope->d}, {"q", plan.flow.slope->q}};
  if (plan.failed_level) {
    doc["failed_level"] = *plan.failed_level;
    doc["failure"] = plan.failure;
  }
  return doc;
}

}  // namespace ergavg
