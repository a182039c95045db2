#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergavg/flow.hpp"
#include "ergavg/measure.hpp"
#include "ergavg/parallel.hpp"

namespace ergavg {

using u128 = unsigned __int128;

std::string to_decimal(u128 v);

/// Largest m with m·‖q_iα₂‖ ≤ ‖q_iα₂‖^{1/2}; capped at 2^30 when the
/// displacement vanishes (periodic winding). i is 1-based.
std::int64_t choose_multiplier(const TorusWinding& flow, const BoxSet& a, std::size_t i);
/// Largest m with m·‖q_iα₂‖ ≤ epsilon, same cap.
std::int64_t multiplier_for_budget(const TorusWinding& flow, std::size_t i, double epsilon);

/// Lipschitz constant of t ↦ μ(A ∩ T_t A) used for tolerance widths: 1 + |α|₁.
double correlation_lipschitz(const TorusWinding& flow);

/// Largest δ with |μ(A ∩ T_t A) − μ(A)| ≤ 1/n on [t_center − δ, t_center + δ]
/// certified by the Lipschitz bound. Throws InfeasibleLevel when the center
/// deviation exceeds 1/(2n).
double choose_delta(const TorusWinding& flow, const BoxSet& a, double t_center, int n);
double delta_from_deviation(double deviation, int n, double lipschitz);

enum class MultiplierRule {
  /// m·‖qα₂‖ ≤ 1/(2n(1+|α|₁)) at level n, smallest m that fits three rescaled
  /// periods into every parent.
  LevelBudget,
  /// m = ⌊‖qα₂‖^{−1/2}⌋ at every level.
  SqrtDistance,
};

struct AdversaryOptions {
  MultiplierRule rule = MultiplierRule::LevelBudget;
  std::size_t max_index = 256;
};

struct LevelRecord {
  int level = 0;
  std::size_t index = 0;  // i_n, 1-based convergent index
  std::int64_t q = 0;     // t(i_n)
  long double displacement = 0.0L;  // signed q·α₂ − nearest integer
  std::int64_t m = 0;
  u128 s = 0;             // m·q
  double delta = 0.0;
  double half_width = 0.0;
  /// Integer k of each node: its center is k/m. Node 2j, 2j+1 are the
  /// children of parent j and use k = p_j, p_j + 1.
  std::vector<std::int64_t> k;
  std::vector<double> center_deviation;
};

struct AdversaryPlan {
  TorusWinding flow;
  BoxSet box;
  int requested_depth = 0;
  std::vector<LevelRecord> levels;
  std::optional<int> failed_level;
  std::string failure;
  NestedIntervals tree;

  std::size_t depth() const { return levels.size(); }
  WeightMeasure measure() const { return WeightMeasure::nested(tree); }
};

AdversaryPlan build_adversarial_measure(const TorusWinding& flow, const BoxSet& a, int n_max,
                                        const AdversaryOptions& options = {});

struct PlanCheck {
  bool ok = true;
  std::vector<std::string> violations;
};

/// Machine check of every plan invariant.
PlanCheck check_plan(const AdversaryPlan& plan);

struct LevelReport {
  int level = 0;
  u128 s = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double quadrature = 0.0;
  double target = 0.0;
  double mixing = 0.0;
  /// Sampled ν-mass of r with |μ(A ∩ T_{s r}A) − μ(A)| < 1/n.
  double good_mass = 0.0;
};

/// (P_{s_n}χ_A, χ_A) per level by Monte Carlo over (r, x) and by exact
/// integration over the leaf intervals.
std::vector<LevelReport> verify_non_almost_mixing(const AdversaryPlan& plan, std::size_t n_samples,
                                                  std::uint64_t seed, const ExecPolicy& exec = {});

nlohmann::json plan_to_json(const AdversaryPlan& plan);

}  // namespace ergavg
