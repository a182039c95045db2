#include "ergavg/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <optional>

#include "ergavg/adversary.hpp"
#include "ergavg/averaging.hpp"
#include "ergavg/decay_curve.hpp"
#include "ergavg/errors.hpp"
#include "ergavg/measure_io.hpp"
#include "ergavg/presets.hpp"

namespace ergavg {
namespace {

using nlohmann::json;

// Positive integer given as any JSON number kind (1e5 is accepted).
std::optional<std::size_t> positive_count(const json& v) {
  if (v.is_number_unsigned()) return v.get<std::size_t>() > 0 ? std::optional(v.get<std::size_t>()) : std::nullopt;
  if (v.is_number_integer()) return v.get<long long>() > 0 ? std::optional(static_cast<std::size_t>(v.get<long long>())) : std::nullopt;
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 1.0 && d <= 9e15 && d == std::floor(d)) return static_cast<std::size_t>(d);
  }
  return std::nullopt;
}

class Config {
 public:
  explicit Config(const json& raw) : raw_(raw) {
    if (!raw_.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  }

  const json& required(const std::string& key) {
    if (!raw_.contains(key)) throw ConfigError(key, "missing");
    resolved_[key] = raw_.at(key);
    return raw_.at(key);
  }

  json value_or(const std::string& key, json fallback) {
    json v = raw_.contains(key) ? raw_.at(key) : std::move(fallback);
    resolved_[key] = v;
    return v;
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const auto n = positive_count(value_or(key, fallback));
    if (!n) throw ConfigError(key, "expected a positive integer");
    return *n;
  }

  double number(const std::string& key, double fallback) {
    const json v = value_or(key, fallback);
    if (!v.is_number()) throw ConfigError(key, "expected a number");
    return v.get<double>();
  }

  std::uint64_t seed() {
    const json& v = required("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw ConfigError("seed", "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  std::vector<double> grid() {
    const json g = value_or("grid", json{{"start", 10.0}, {"factor", 10.0}, {"count", 4}});
    if (!g.is_object()) throw ConfigError("grid", "expected {start, factor, count}");
    const double start = g.value("start", 10.0);
    const double factor = g.value("factor", 10.0);
    const auto n = g.value("count", 4);
    if (!(start > 0.0) || !(factor > 1.0)) throw ConfigError("grid", "need start > 0 and factor > 1");
    if (n < 2) throw ConfigError("grid", "count must be at least 2");
    resolved_["grid"] = {{"start", start}, {"factor", factor}, {"count", n}};
    return geometric_grid(start, factor, static_cast<std::size_t>(n));
  }

  const json& resolved() const { return resolved_; }

 private:
  const json& raw_;
  json resolved_ = json::object();
};

struct SampleCounts {
  std::size_t outer;
  std::size_t inner;
};

SampleCounts samples_pair(Config& cfg, std::size_t fallback) {
  const json v = cfg.value_or("samples", json{{"outer", fallback}, {"inner", fallback}});
  if (const auto n = positive_count(v)) return {*n, *n};
  if (v.is_object() && v.contains("outer") && v.contains("inner")) {
    const auto outer = positive_count(v.at("outer"));
    const auto inner = positive_count(v.at("inner"));
    if (outer && inner) return {*outer, *inner};
  }
  throw ConfigError("samples", "expected a positive integer or {outer, inner}");
}

SpectralModel spectral_for(Config& cfg, const TorusWinding* flow, const Observable* f) {
  const json spec = cfg.value_or("spectral", "observable");
  if (spec.is_string() && spec.get<std::string>() == "observable") {
    if (!flow || !f) throw ConfigError("spectral", "'observable' needs a flow and an observable");
    const auto* series = std::get_if<FourierSeries>(f);
    if (!series) throw ConfigError("observable", "spectral evaluation needs a trigonometric observable");
    try {
      return spectrum_of_observable(*flow, *series);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("observable", e.what());
    }
  }
  return parse_spectral(spec);
}

ExperimentOutput avg_scan(Config& cfg, const ExecPolicy& exec) {
  const TorusWinding flow = parse_flow(cfg.required("flow"));
  const Observable f = parse_observable(cfg.value_or("observable", "cos(1)"), flow.dimension());
  const WeightMeasure nu = parse_measure(cfg.required("measure"));
  const auto grid = cfg.grid();
  const SampleCounts n = samples_pair(cfg, 10000);
  const std::uint64_t seed = cfg.seed();
  std::optional<SpectralModel> sigma;
  if (const auto* series = std::get_if<FourierSeries>(&f)) sigma = spectrum_of_observable(flow, *series);
  auto eval = [&](double t, std::uint64_t s) {
    const L1Deviation d = l1_deviation(flow, f, nu, t, n.outer, n.inner, s, exec);
    PointResult p{d.value, d.std_error, {{"bias_bound", d.bias_bound}}};
    if (sigma) p.extras["l2_spectral"] = l2_norm_spectral(*sigma, nu, t);
    return p;
  };
  DecayCurve curve = convergence_scan(eval, grid, seed);
  return {curve_csv(curve), curve_meta(curve)};
}

ExperimentOutput spectral_scan(Config& cfg, const ExecPolicy&) {
  const WeightMeasure nu = parse_measure(cfg.required("measure"));
  std::optional<TorusWinding> flow;
  std::optional<Observable> f;
  const json flow_spec = cfg.value_or("flow", nullptr);
  if (!flow_spec.is_null()) {
    flow = parse_flow(flow_spec);
    f = parse_observable(cfg.value_or("observable", "cos(1)"), flow->dimension());
  }
  const SpectralModel sigma = spectral_for(cfg, flow ? &*flow : nullptr, f ? &*f : nullptr);
  const auto grid = cfg.grid();
  const std::uint64_t seed = cfg.seed();
  auto eval = [&](double t, std::uint64_t) { return PointResult{l2_norm_spectral(sigma, nu, t), 0.0, json::object()}; };
  DecayCurve curve = convergence_scan(eval, grid, seed);
  return {curve_csv(curve), curve_meta(curve)};
}

ExperimentOutput convolution_root(Config& cfg, const ExecPolicy&) {
  const WeightMeasure nu = parse_measure(cfg.required("measure"));
  const std::size_t power = cfg.count("power", 2);
  if (power < 2) throw ConfigError("power", "must be at least 2");
  std::optional<TorusWinding> flow;
  std::optional<Observable> f;
  const json flow_spec = cfg.value_or("flow", nullptr);
  if (!flow_spec.is_null()) {
    flow = parse_flow(flow_spec);
    f = parse_observable(cfg.value_or("observable", "cos(1)"), flow->dimension());
  }
  const SpectralModel sigma = spectral_for(cfg, flow ? &*flow : nullptr, f ? &*f : nullptr);
  const WeightMeasure nu_n = convolution_power(nu, static_cast<int>(power));
  const auto grid = cfg.grid();
  const std::uint64_t seed = cfg.seed();
  auto eval = [&](double t, std::uint64_t) {
    const DescentReport d = holder_descent_check(sigma, nu, t, static_cast<int>(power));
    PointResult p{l2_norm_spectral(sigma, nu, t), 0.0, json::object()};
    p.extras = {{"l2_power", l2_norm_spectral(sigma, nu_n, t)}, {"lhs", d.lhs}, {"rhs", d.rhs}, {"pass", d.pass}};
    return p;
  };
  DecayCurve curve = convergence_scan(eval, grid, seed);
  return {curve_csv(curve), curve_meta(curve)};
}

ExperimentOutput mixing_probe(Config& cfg, const ExecPolicy& exec) {
  const SpikeProfile rho = parse_spike_profile(cfg.required("correlation"));
  const WeightMeasure nu = parse_measure(cfg.required("measure"));
  if (!nu.is_atomless()) throw ConfigError("measure", "weight must be atomless");
  const auto grid = cfg.grid();
  ProbeOptions opt;
  opt.band = cfg.number("band", 1.0);
  opt.quadrature.grid_cells = cfg.count("grid_cells", 1024);
  opt.samples = cfg.count("samples", 200000);
  opt.seed = cfg.seed();
  opt.exec = exec;
  DecayCurve curve = almost_mixing_probe(rho, nu, grid, opt);
  return {curve_csv(curve), curve_meta(curve)};
}

ExperimentOutput adversary(Config& cfg, const ExecPolicy& exec) {
  const TorusWinding flow = parse_flow(cfg.value_or("flow", "winding-golden"));
  const json box_spec = cfg.value_or("box", json::array({0.5, 0.5}));
  BoxSet box;
  try {
    box = make_box(box_spec.get<std::vector<double>>());
  } catch (const std::exception& e) {
    throw ConfigError("box", e.what());
  }
  if (box.arcs.size() != flow.dimension()) throw ConfigError("box", "needs one arc per flow dimension");
  const std::size_t depth = cfg.count("depth", 4);
  const std::size_t samples = cfg.count("samples", 100000);
  const json rule_v = cfg.value_or("rule", "level-budget");
  if (!rule_v.is_string()) throw ConfigError("rule", "expected a string");
  const std::string rule = rule_v.get<std::string>();
  AdversaryOptions opt;
  if (rule == "sqrt-distance")
    opt.rule = MultiplierRule::SqrtDistance;
  else if (rule != "level-budget")
    throw ConfigError("rule", "unknown multiplier rule '" + rule + "'");
  const std::uint64_t seed = cfg.seed();
  AdversaryPlan plan;
  try {
    plan = build_adversarial_measure(flow, box, static_cast<int>(depth), opt);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("flow", e.what());
  }
  const PlanCheck check = check_plan(plan);
  const auto report = verify_non_almost_mixing(plan, samples, seed, exec);
  std::string csv = "n,s,estimate,error,quadrature,target,mixing\n";
  for (const auto& r : report) {
    csv += std::to_string(r.level) + ',' + to_decimal(r.s) + ',' + format_number(r.estimate) + ',' +
           format_number(r.std_error) + ',' + format_number(r.quadrature) + ',' + format_number(r.target) + ',' +
           format_number(r.mixing) + '\n';
  }
  json levels = json::array();
  for (const auto& r : report) levels.push_back({{"n", r.level}, {"good_mass", r.good_mass}});
  json meta = {{"plan", plan_to_json(plan)},
               {"invariants", {{"ok", check.ok}, {"violations", check.violations}}},
               {"levels", std::move(levels)}};
  return {std::move(csv), std::move(meta)};
}

}  // namespace

ExperimentOutput evaluate_experiment(const json& config, const ExecPolicy& exec) {
  Config cfg(config);
  const json& kind_v = cfg.required("experiment");
  if (!kind_v.is_string()) throw ConfigError("experiment", "expected a string");
  const std::string kind = kind_v.get<std::string>();
  ExperimentOutput out;
  if (kind == "avg-scan")
    out = avg_scan(cfg, exec);
  else if (kind == "spectral-scan")
    out = spectral_scan(cfg, exec);
  else if (kind == "convolution-root")
    out = convolution_root(cfg, exec);
  else if (kind == "almost-mixing-probe")
    out = mixing_probe(cfg, exec);
  else if (kind == "adversary")
    out = adversary(cfg, exec);
  else
    throw ConfigError("experiment", "unknown experiment kind '" + kind + "'");
  json meta = {{"version", kVersion}, {"config", cfg.resolved()}};
  for (auto& [key, value] : out.meta.items()) meta[key] = value;
  out.meta = std::move(meta);
  return out;
}

RunResult run_experiment(const json& config, const RunOptions& options) {
  RunResult result;
  std::string prefix;
  try {
    if (options.out_prefix) {
      prefix = *options.out_prefix;
    } else if (config.is_object() && config.contains("output") && config.at("output").is_string()) {
      prefix = config.at("output").get<std::string>();
    } else {
      throw ConfigError("output", "missing (give it in the config or with --out)");
    }
    ExperimentOutput out = evaluate_experiment(config, options.exec);
    out.meta["config"]["output"] = prefix;
    result.csv_path = prefix + ".csv";
    result.meta_path = prefix + ".meta";
    const std::filesystem::path parent = std::filesystem::path(result.csv_path).parent_path();
    if (!parent.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(parent, ec);
      if (ec) throw IoError("cannot create directory '" + parent.string() + "': " + ec.message());
    }
    write_text_file(result.csv_path, out.csv);
    write_text_file(result.meta_path, out.meta.dump(2) + "\n");
    result.message = "wrote " + result.csv_path + " and " + result.meta_path;
  } catch (const ConfigError& e) {
    result.exit_code = 2;
    result.message = e.what();
  } catch (const IoError& e) {
    result.exit_code = 3;
    result.message = e.what();
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.message = e.what();
  }
  return result;
}

RunResult run_experiment_file(const std::string& path, const RunOptions& options) {
  json config;
  try {
    config = json::parse(read_text_file(path));
  } catch (const IoError& e) {
    return {3, e.what(), {}, {}};
  } catch (const json::parse_error& e) {
    return {2, std::string("config '") + path + "' is not valid JSON: " + e.what(), {}, {}};
  }
  return run_experiment(config, options);
}

}  // namespace ergavg
