#pragma once

#include <string>

#include <json.hpp>

#include "ergavg/measure.hpp"

namespace ergavg {

/// Tagged JSON document for a measure; doubles are written with 17
/// significant digits so from_json(to_json(ν)) reproduces ν exactly.
nlohmann::json to_json(const WeightMeasure& nu);
WeightMeasure measure_from_json(const nlohmann::json& doc);

std::string serialize(const WeightMeasure& nu);
WeightMeasure deserialize_measure(const std::string& text);

}  // namespace ergavg
