#include "ergavg/measure_io.hpp"

#include "ergavg/errors.hpp"

namespace ergavg {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

using nlohmann::json;

json density_json(const Density& d) {
  return std::visit(Overloaded{
                        [](const Uniform& u) { return json{{"kind", "uniform"}, {"lo", u.lo}, {"hi", u.hi}}; },
                        [](const Triangular& t) {
                          return json{{"kind", "triangular"}, {"lo", t.lo}, {"mode", t.mode}, {"hi", t.hi}};
                        },
                        [](const TruncatedGaussian& g) {
                          return json{{"kind", "gaussian"}, {"mean", g.mean}, {"sd", g.sd}, {"lo", g.lo}, {"hi", g.hi}};
                        },
                        [](const PiecewiseConstant& p) {
                          return json{{"kind", "piecewise"}, {"lo", p.lo}, {"hi", p.hi}, {"masses", p.masses}};
                        },
                    },
                    d);
}

double number(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_number())
    throw InvalidMeasure(std::string("measure document: missing numeric field '") + key + "'");
  return doc.at(key).get<double>();
}

std::vector<double> numbers(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_array())
    throw InvalidMeasure(std::string("measure document: missing array field '") + key + "'");
  return doc.at(key).get<std::vector<double>>();
}

}  // namespace

json to_json(const WeightMeasure& nu) {
  return std::visit(Overloaded{
                        [](const Density& d) { return density_json(d); },
                        [](const SelfSimilar& s) {
                          return json{{"kind", "self-similar"},
                                      {"ratios", s.ratios},
                                      {"shifts", s.shifts},
                                      {"weights", s.weights}};
                        },
                        [](const NestedIntervals& t) {
                          json levels = json::array();
                          for (const auto& level : t.levels) {
                            json row = json::array();
                            for (const auto& node : level) row.push_back(json::array({node.offset, node.half_width}));
                            levels.push_back(std::move(row));
                          }
                          return json{{"kind", "nested"},
                                      {"root_center", t.root_center},
                                      {"root_half_width", t.root_half_width},
                                      {"levels", std::move(levels)}};
                        },
                        [](const Convolution& c) {
                          json parts = json::array();
                          for (const auto& m : c.components) parts.push_back(to_json(m));
                          return json{{"kind", "convolution"}, {"components", std::move(parts)}};
                        },
                        [](const Scaled& s) { return json{{"kind", "scaled"}, {"factor", s.factor}, {"inner", to_json(s.inner)}}; },
                        [](const PointMass& p) { return json{{"kind", "point-mass"}, {"at", p.at}}; },
                    },
                    nu.node().value);
}

WeightMeasure measure_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc.at("kind").is_string())
    throw InvalidMeasure("measure document: expected an object with a string 'kind'");
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "uniform") return WeightMeasure::density(Uniform{number(doc, "lo"), number(doc, "hi")});
  if (kind == "triangular")
    return WeightMeasure::density(Triangular{number(doc, "lo"), number(doc, "mode"), number(doc, "hi")});
  if (kind == "gaussian")
    return WeightMeasure::density(
        TruncatedGaussian{number(doc, "mean"), number(doc, "sd"), number(doc, "lo"), number(doc, "hi")});
  if (kind == "piecewise")
    return WeightMeasure::density(PiecewiseConstant{number(doc, "lo"), number(doc, "hi"), numbers(doc, "masses")});
  if (kind == "self-similar")
    return WeightMeasure::self_similar(SelfSimilar{numbers(doc, "ratios"), numbers(doc, "shifts"), numbers(doc, "weights")});
  if (kind == "nested") {
    NestedIntervals t;
    t.root_center = number(doc, "root_center");
    t.root_half_width = number(doc, "root_half_width");
    if (!doc.contains("levels") || !doc.at("levels").is_array())
      throw InvalidMeasure("measure document: nested measure needs 'levels'");
    for (const auto& row : doc.at("levels")) {
      std::vector<NestedNode> level;
      for (const auto& node : row) {
        if (!node.is_array() || node.size() != 2) throw InvalidMeasure("measure document: nested node must be [offset, half_width]");
        level.push_back({node[0].get<double>(), node[1].get<double>()});
      }
      t.levels.push_back(std::move(level));
    }
    return WeightMeasure::nested(std::move(t));
  }
  if (kind == "convolution") {
    Convolution c;
    if (!doc.contains("components") || !doc.at("components").is_array())
      throw InvalidMeasure("measure document: convolution needs 'components'");
    for (const auto& part : doc.at("components")) c.components.push_back(measure_from_json(part));
    return make_measure(MeasureNode{std::move(c)});
  }
  if (kind == "scaled") {
    if (!doc.contains("inner")) throw InvalidMeasure("measure document: scaled measure needs 'inner'");
    return make_measure(MeasureNode{Scaled{number(doc, "factor"), measure_from_json(doc.at("inner"))}});
  }
  if (kind == "point-mass") return WeightMeasure::point_mass(number(doc, "at"));
  throw InvalidMeasure("measure document: unknown kind '" + kind + "'");
}

std::string serialize(const WeightMeasure& nu) { return to_json(nu).dump(2); }

WeightMeasure deserialize_measure(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidMeasure(std::string("measure document: ") + e.what());
  }
  return measure_from_json(doc);
}

}  // namespace ergavg
