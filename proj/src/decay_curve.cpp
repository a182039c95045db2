#include "ergavg/decay_curve.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ergavg/errors.hpp"

namespace ergavg {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string curve_csv(const DecayCurve& curve) {
  std::string out = "t,value,error\n";
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const bool bad = k < curve.failed.size() && curve.failed[k];
    out += format_number(curve.grid[k]);
    out += ',';
    out += bad ? "nan" : format_number(curve.values[k]);
    out += ',';
    out += bad ? "nan" : format_number(curve.errors[k]);
    out += '\n';
  }
  return out;
}

nlohmann::json curve_meta(const DecayCurve& curve) {
  nlohmann::json doc = curve.metadata;
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t k = 0; k < curve.size(); ++k) {
    nlohmann::json p = {{"t", curve.grid[k]}, {"failed", k < curve.failed.size() && curve.failed[k]}};
    if (k < curve.extras.size() && !curve.extras[k].is_null() && !curve.extras[k].empty()) p["extras"] = curve.extras[k];
    points.push_back(std::move(p));
  }
  doc["points"] = std::move(points);
  return doc;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> geometric_grid(double start, double factor, std::size_t count) {
  if (!(start > 0.0) || !(factor > 1.0) || count < 2)
    throw std::invalid_argument("grid: need start > 0, factor > 1 and at least 2 points");
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) grid[k] = start * std::pow(factor, static_cast<double>(k));
  return grid;
}

}  // namespace ergavg
