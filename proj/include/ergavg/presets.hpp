#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergavg/correlation.hpp"
#include "ergavg/flow.hpp"
#include "ergavg/measure.hpp"
#include "ergavg/spectral.hpp"

namespace ergavg {

/// A config value that names no known preset or does not parse. `field` is
/// the config key it came from.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument("config field '" + field + "': " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct PresetInfo {
  std::string kind;
  std::string name;
  std::string description;
};

/// All presets in a fixed order.
const std::vector<PresetInfo>& list_presets();
std::string presets_text();

/// Measure expressions such as `uniform(0,1)`, `cantor-thirds`,
/// `conv(dyadic-odd, dyadic-even)`, `scale(power(cantor-thirds, 2), 3)`, or
/// a JSON measure document.
WeightMeasure parse_measure(const nlohmann::json& spec, const std::string& field = "measure");
TorusWinding parse_flow(const nlohmann::json& spec, const std::string& field = "flow");
SpectralModel parse_spectral(const nlohmann::json& spec, const std::string& field = "spectral");
SpikeProfile parse_spike_profile(const nlohmann::json& spec, const std::string& field = "correlation");
Observable parse_observable(const nlohmann::json& spec, std::size_t dimension, const std::string& field = "observable");

/// The shipped measures by name.
WeightMeasure cantor_thirds();
WeightMeasure dyadic_odd();
WeightMeasure dyadic_even();

}  // namespace ergavg
