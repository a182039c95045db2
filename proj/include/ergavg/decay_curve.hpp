#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace ergavg {

/// Sampled map t ↦ deviation with per-point errors; the unit of experiment output.
struct DecayCurve {
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> errors;
  std::vector<bool> failed;
  /// Per-point diagnostics (may be empty objects).
  std::vector<nlohmann::json> extras;
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t size() const { return grid.size(); }
};

/// 17 significant digits, locale independent; NaN prints as "nan".
std::string format_number(double v);

/// `t,value,error` header plus one row per grid point; failed points carry nan.
std::string curve_csv(const DecayCurve& curve);
/// Metadata plus per-point failure flags and extras.
nlohmann::json curve_meta(const DecayCurve& curve);

/// Writes text to a file, replacing it; throws IoError.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

/// Geometric grid start·factor^k, k = 0..count-1.
std::vector<double> geometric_grid(double start, double factor, std::size_t count);

}  // namespace ergavg
