#include "ergavg/presets.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <variant>

#include "ergavg/errors.hpp"
#include "ergavg/measure_io.hpp"

namespace ergavg {
namespace {

struct Call;
using Arg = std::variant<double, Call>;

struct Call {
  std::string name;
  std::vector<Arg> args;
  bool has_parens = false;
};

class Parser {
 public:
  Parser(std::string text, std::string field) : text_(std::move(text)), field_(std::move(field)) {}

  Call parse() {
    Call c = call();
    skip();
    if (pos_ != text_.size()) error("unexpected '" + text_.substr(pos_) + "'");
    return c;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    throw ConfigError(field_, "cannot parse '" + text_ + "': " + what);
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool number_ahead() const {
    if (pos_ >= text_.size()) return false;
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return true;
    return (c == '-' || c == '+') && pos_ + 1 < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) || text_[pos_ + 1] == '.');
  }

  double number() {
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) error("expected a number");
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  Call call() {
    skip();
    Call c;
    while (pos_ < text_.size()) {
      const char ch = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.') {
        c.name.push_back(ch);
        ++pos_;
      } else {
        break;
      }
    }
    if (c.name.empty() || !std::isalpha(static_cast<unsigned char>(c.name.front()))) error("expected a name");
    skip();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      c.has_parens = true;
      ++pos_;
      skip();
      if (pos_ < text_.size() && text_[pos_] == ')') {
        ++pos_;
        return c;
      }
      for (;;) {
        skip();
        if (number_ahead())
          c.args.emplace_back(number());
        else
          c.args.emplace_back(call());
        skip();
        if (pos_ >= text_.size()) error("missing ')'");
        if (text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (text_[pos_] == ')') {
          ++pos_;
          break;
        }
        error("expected ',' or ')'");
      }
    }
    return c;
  }

  std::string text_;
  std::string field_;
  std::size_t pos_ = 0;
};

std::string spec_text(const nlohmann::json& spec, const std::string& field) {
  if (!spec.is_string()) throw ConfigError(field, "expected a preset string");
  return spec.get<std::string>();
}

double num_arg(const Call& c, std::size_t k, const std::string& field) {
  if (k >= c.args.size() || !std::holds_alternative<double>(c.args[k]))
    throw ConfigError(field, "'" + c.name + "' expects a number as argument " + std::to_string(k + 1));
  return std::get<double>(c.args[k]);
}

void arity(const Call& c, std::size_t lo, std::size_t hi, const std::string& field) {
  if (c.args.size() < lo || c.args.size() > hi)
    throw ConfigError(field, "'" + c.name + "' takes " + std::to_string(lo) + (lo == hi ? "" : "-" + std::to_string(hi)) +
                                 " arguments, got " + std::to_string(c.args.size()));
}

WeightMeasure build_measure(const Call& c, const std::string& field) {
  try {
    if (c.name == "uniform") {
      arity(c, 2, 2, field);
      return WeightMeasure::uniform(num_arg(c, 0, field), num_arg(c, 1, field));
    }
    if (c.name == "triangular") {
      arity(c, 3, 3, field);
      return WeightMeasure::density(Triangular{num_arg(c, 0, field), num_arg(c, 1, field), num_arg(c, 2, field)});
    }
    if (c.name == "gauss") {
      arity(c, 4, 4, field);
      return WeightMeasure::density(
          TruncatedGaussian{num_arg(c, 0, field), num_arg(c, 1, field), num_arg(c, 2, field), num_arg(c, 3, field)});
    }
    if (c.name == "cantor-thirds") {
      arity(c, 0, 0, field);
      return cantor_thirds();
    }
    if (c.name == "cantor") {
      arity(c, 1, 1, field);
      const double r = num_arg(c, 0, field);
      return WeightMeasure::self_similar(SelfSimilar{{r, r}, {0.0, 1.0 - r}, {0.5, 0.5}});
    }
    if (c.name == "dyadic-odd") {
      arity(c, 0, 0, field);
      return dyadic_odd();
    }
    if (c.name == "dyadic-even") {
      arity(c, 0, 0, field);
      return dyadic_even();
    }
    if (c.name == "conv") {
      if (c.args.size() < 2) throw ConfigError(field, "'conv' needs at least two measures");
      std::vector<WeightMeasure> parts;
      for (const auto& a : c.args) {
        if (!std::holds_alternative<Call>(a)) throw ConfigError(field, "'conv' arguments must be measures");
        parts.push_back(build_measure(std::get<Call>(a), field));
      }
      return make_measure(MeasureNode{Convolution{std::move(parts)}});
    }
    if (c.name == "power" || c.name == "scale") {
      arity(c, 2, 2, field);
      if (!std::holds_alternative<Call>(c.args[0])) throw ConfigError(field, "'" + c.name + "' needs a measure first");
      const WeightMeasure inner = build_measure(std::get<Call>(c.args[0]), field);
      const double v = num_arg(c, 1, field);
      if (c.name == "scale") return scale(inner, v);
      if (v != std::floor(v)) throw ConfigError(field, "'power' needs an integer exponent");
      return convolution_power(inner, static_cast<int>(v));
    }
  } catch (const InvalidMeasure& e) {
    throw ConfigError(field, e.what());
  }
  throw ConfigError(field, "unknown measure preset '" + c.name + "'");
}

}  // namespace

WeightMeasure cantor_thirds() {
  return WeightMeasure::self_similar(SelfSimilar{{1.0 / 3.0, 1.0 / 3.0}, {0.0, 2.0 / 3.0}, {0.5, 0.5}});
}

// Binary digits at odd positions (1st, 3rd, ...) free, even positions zero.
WeightMeasure dyadic_odd() {
  return WeightMeasure::self_similar(SelfSimilar{{0.25, 0.25}, {0.0, 0.5}, {0.5, 0.5}});
}

WeightMeasure dyadic_even() {
  return WeightMeasure::self_similar(SelfSimilar{{0.25, 0.25}, {0.0, 0.25}, {0.5, 0.5}});
}

const std::vector<PresetInfo>& list_presets() {
  static const std::vector<PresetInfo> presets = {
      {"measure", "uniform(a,b)", "uniform density on [a,b]"},
      {"measure", "triangular(a,c,b)", "triangular density on [a,b] with mode c"},
      {"measure", "gauss(m,s,lo,hi)", "normal(m,s) truncated to [lo,hi]"},
      {"measure", "cantor-thirds", "middle-thirds Cantor measure on [0,1]"},
      {"measure", "cantor(r)", "symmetric Cantor measure with ratio r"},
      {"measure", "dyadic-odd", "uniform on binary expansions vanishing at even positions"},
      {"measure", "dyadic-even", "uniform on binary expansions vanishing at odd positions"},
      {"measure", "conv(x,y,...)", "convolution of measures"},
      {"measure", "power(x,n)", "n-fold convolution power"},
      {"measure", "scale(x,t)", "pushforward under r -> t*r"},
      {"flow", "winding-golden", "2-torus winding, alpha = (1, (sqrt5-1)/2)"},
      {"flow", "winding-pell", "2-torus winding, alpha = (1, sqrt2-1)"},
      {"flow", "winding-periodic", "2-torus winding, alpha = (1, 1/2) (periodic, synthetic)"},
      {"flow", "winding-circle", "circle rotation flow, alpha = (1)"},
      {"spectral", "spectral-lebesgue", "uniform spectral density on [-1,1]"},
      {"spectral", "atom(w)", "single atom at w"},
      {"spectral", "atoms2(w)", "atoms of mass 1/2 at w and -w"},
      {"spectral", "observable", "spectrum of the configured observable under the configured flow"},
      {"correlation", "spike(g,w,h)", "core bump and spikes at g^j up to 1e12, half-width w, height h, baseline 0"},
      {"correlation", "spike(g,w,h,count,baseline)", "same with explicit spike count and baseline"},
      {"correlation", "progression(step,w,h,count)", "spikes at j*step, j = 1..count"},
      {"observable", "cos(k)", "sqrt2*cos(2*pi*k*x_d) on the last coordinate"},
      {"observable", "cos(k,coord)", "sqrt2*cos(2*pi*k*x_coord), coordinates from 1"},
      {"observable", "box(a1,...,ad)", "indicator of [0,a1) x ... x [0,ad)"},
      {"observable", "one", "constant function 1"},
  };
  return presets;
}

std::string presets_text() {
  std::ostringstream out;
  std::string kind;
  for (const auto& p : list_presets()) {
    if (p.kind != kind) {
      kind = p.kind;
      out << kind << ":\n";
    }
    out << "  " << p.name;
    for (std::size_t pad = p.name.size(); pad < 30; ++pad) out << ' ';
    out << p.description << '\n';
  }
  return out.str();
}

WeightMeasure parse_measure(const nlohmann::json& spec, const std::string& field) {
  if (spec.is_object()) {
    try {
      return measure_from_json(spec);
    } catch (const InvalidMeasure& e) {
      throw ConfigError(field, e.what());
    }
  }
  return build_measure(Parser(spec_text(spec, field), field).parse(), field);
}

TorusWinding parse_flow(const nlohmann::json& spec, const std::string& field) {
  const std::string name = spec_text(spec, field);
  if (name == "winding-golden") return winding_from_slope({-1, 5, 2}, name);
  if (name == "winding-pell") return winding_from_slope({-1, 2, 1}, name);
  if (name == "winding-periodic") return winding_from_slope({1, 0, 2}, name);
  if (name == "winding-circle") return make_winding({1.0}, name);
  throw ConfigError(field, "unknown flow preset '" + name + "'");
}

SpectralModel parse_spectral(const nlohmann::json& spec, const std::string& field) {
  const Call c = Parser(spec_text(spec, field), field).parse();
  if (c.name == "spectral-lebesgue") {
    arity(c, 0, 0, field);
    return make_spectral({}, SpectralDensity{1.0, Uniform{-1.0, 1.0}});
  }
  if (c.name == "atom") {
    arity(c, 1, 1, field);
    return make_spectral({{num_arg(c, 0, field), 1.0}});
  }
  if (c.name == "atoms2") {
    arity(c, 1, 1, field);
    const double w = num_arg(c, 0, field);
    if (w == 0.0) return make_spectral({{0.0, 1.0}});
    return make_spectral({{-w, 0.5}, {w, 0.5}});
  }
  throw ConfigError(field, "unknown spectral preset '" + c.name + "'");
}

SpikeProfile parse_spike_profile(const nlohmann::json& spec, const std::string& field) {
  const Call c = Parser(spec_text(spec, field), field).parse();
  try {
    if (c.name == "spike") {
      arity(c, 3, 5, field);
      const double growth = num_arg(c, 0, field);
      if (!(growth > 1.0)) throw ConfigError(field, "spike growth factor must exceed 1");
      // by default, spikes up to 10^12
      const auto count = c.args.size() > 3 ? static_cast<std::size_t>(num_arg(c, 3, field))
                                           : static_cast<std::size_t>(std::ceil(12.0 * std::log(10.0) / std::log(growth)));
      const double baseline = c.args.size() > 4 ? num_arg(c, 4, field) : 0.0;
      return geometric_spikes(growth, num_arg(c, 1, field), num_arg(c, 2, field), count, baseline);
    }
    if (c.name == "progression") {
      arity(c, 4, 5, field);
      const double baseline = c.args.size() > 4 ? num_arg(c, 4, field) : 0.0;
      return progression_spikes(num_arg(c, 0, field), num_arg(c, 1, field), num_arg(c, 2, field),
                                static_cast<std::size_t>(num_arg(c, 3, field)), baseline);
    }
  } catch (const std::invalid_argument& e) {
    if (dynamic_cast<const ConfigError*>(&e)) throw;
    throw ConfigError(field, e.what());
  }
  throw ConfigError(field, "unknown correlation preset '" + c.name + "'");
}

Observable parse_observable(const nlohmann::json& spec, std::size_t dimension, const std::string& field) {
  const Call c = Parser(spec_text(spec, field), field).parse();
  try {
    if (c.name == "one") return ConstantObservable{1.0};
    if (c.name == "cos") {
      arity(c, 1, 2, field);
      const int k = static_cast<int>(num_arg(c, 0, field));
      const std::size_t coord = c.args.size() > 1 ? static_cast<std::size_t>(num_arg(c, 1, field)) - 1 : dimension - 1;
      return cosine_observable(dimension, coord, k);
    }
    if (c.name == "box") {
      std::vector<double> arcs;
      for (std::size_t k = 0; k < c.args.size(); ++k) arcs.push_back(num_arg(c, k, field));
      if (arcs.size() != dimension) throw ConfigError(field, "box needs one arc per flow dimension");
      return BoxIndicator{make_box(std::move(arcs))};
    }
  } catch (const std::invalid_argument& e) {
    if (dynamic_cast<const ConfigError*>(&e)) throw;
    throw ConfigError(field, e.what());
  }
  throw ConfigError(field, "unknown observable preset '" + c.name + "'");
}

}  // namespace ergavg
