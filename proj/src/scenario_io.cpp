#include "searchplan/scenario_io.hpp"

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <string>

namespace searchplan {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ScenarioParseError(where + ": " + what);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) fail(where, "unknown key \"" + key + "\"");
  }
}

const json& get_required(const json& j, const std::string& where, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing key \"") + key + "\"");
  return *it;
}

double get_number(const json& j, const std::string& where, const char* key) {
  const json& v = get_required(j, where, key);
  if (!v.is_number()) fail(where, std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

double get_number_or(const json& j, const std::string& where, const char* key, double fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) fail(where, std::string("\"") + key + "\" must be a number");
  return it->get<double>();
}

std::string get_type(const json& j, const std::string& where) {
  const json& v = get_required(j, where, "type");
  if (!v.is_string()) fail(where, "\"type\" must be a string");
  return v.get<std::string>();
}

CellId parse_cell_id(const std::string& key, const std::string& where) {
  CellId id = 0;
  const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), id);
  if (ec != std::errc{} || ptr != key.data() + key.size())
    fail(where, "\"" + key + "\" is not a cell id");
  return id;
}

std::map<CellId, double> parse_cell_map(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object keyed by cell ids");
  std::map<CellId, double> out;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) fail(where, "value for cell \"" + key + "\" must be a number");
    out[parse_cell_id(key, where)] = value.get<double>();
  }
  return out;
}

PossibilityArea parse_area(const json& j) {
  const std::string where = "area";
  const std::string type = get_type(j, where);
  if (type == "cells") {
    check_keys(j, where, {"type", "cells"});
    const json& cells = get_required(j, where, "cells");
    if (!cells.is_array()) fail(where, "\"cells\" must be an array");
    CellArea a;
    for (const json& c : cells) {
      if (!c.is_number_integer()) fail(where, "cell ids must be integers");
      a.cells.push_back(c.get<CellId>());
    }
    return a;
  }
  if (type == "interval") {
    check_keys(j, where, {"type", "a", "b"});
    return IntervalArea{get_number(j, where, "a"), get_number(j, where, "b")};
  }
  if (type == "plane") {
    check_keys(j, where, {"type"});
    return PlaneArea{};
  }
  if (type == "grid") {
    check_keys(j, where, {"type"});
    return ImplicitGridArea{};
  }
  fail(where, "unknown type \"" + type + "\"");
}

TargetDistribution parse_distribution(const json& j) {
  const std::string where = "distribution";
  const std::string type = get_type(j, where);
  if (type == "discrete") {
    check_keys(j, where, {"type", "masses"});
    DiscreteTargetDistribution d;
    d.masses = parse_cell_map(get_required(j, where, "masses"), where + ".masses");
    return d;
  }
  if (type == "circular_normal") {
    check_keys(j, where, {"type", "sigma"});
    return CircularNormal{get_number(j, where, "sigma")};
  }
  if (type == "uniform") {
    check_keys(j, where, {"type", "a", "b"});
    return Uniform1D{get_number(j, where, "a"), get_number(j, where, "b")};
  }
  if (type == "grid") {
    check_keys(j, where, {"type", "dim", "cells"});
    GridDensity g;
    const json& dim = get_required(j, where, "dim");
    if (!dim.is_number_integer()) fail(where, "\"dim\" must be 1 or 2");
    g.dim = dim.get<int>();
    const json& cells = get_required(j, where, "cells");
    if (!cells.is_array()) fail(where, "\"cells\" must be an array");
    for (const json& c : cells) {
      if (!c.is_array() || c.size() != 4) fail(where, "grid cells are [x, y, area, density]");
      for (const json& v : c)
        if (!v.is_number()) fail(where, "grid cell entries must be numbers");
      g.cells.push_back({c[0].get<double>(), c[1].get<double>(), c[2].get<double>(),
                         c[3].get<double>()});
    }
    return g;
  }
  fail(where, "unknown type \"" + type + "\"");
}

DetectionModel parse_detection(const json& j) {
  const std::string where = "detection";
  const std::string type = get_type(j, where);
  if (type == "exp") {
    check_keys(j, where, {"type", "alpha"});
    return ExpHomogeneous{get_number(j, where, "alpha")};
  }
  if (type == "exp_per_cell") {
    check_keys(j, where, {"type", "rates"});
    ExpPerCell d;
    d.rates = parse_cell_map(get_required(j, where, "rates"), where + ".rates");
    return d;
  }
  if (type == "exp_piecewise") {
    check_keys(j, where, {"type", "pieces"});
    const json& pieces = get_required(j, where, "pieces");
    if (!pieces.is_array()) fail(where, "\"pieces\" must be an array");
    ExpPiecewise1D d;
    for (const json& p : pieces) {
      check_keys(p, where + ".pieces", {"from", "to", "alpha"});
      d.pieces.push_back({get_number(p, where, "from"), get_number(p, where, "to"),
                          get_number(p, where, "alpha")});
    }
    return d;
  }
  if (type == "power") {
    check_keys(j, where, {"type", "scale", "shape"});
    return make_power_detection(get_number(j, where, "scale"), get_number(j, where, "shape"));
  }
  fail(where, "unknown type \"" + type + "\"");
}

EffortSchedule parse_effort(const json& j) {
  const std::string where = "effort";
  const std::string type = get_type(j, where);
  if (type == "linear") {
    check_keys(j, where, {"type", "rate", "offset"});
    return LinearEffort{get_number(j, where, "rate"), get_number_or(j, where, "offset", 0.0)};
  }
  if (type == "table") {
    check_keys(j, where, {"type", "knots"});
    const json& knots = get_required(j, where, "knots");
    if (!knots.is_array()) fail(where, "\"knots\" must be an array");
    TableEffort e;
    for (const json& k : knots) {
      if (!k.is_array() || k.size() != 2) fail(where, "knots are [t, value]");
      if (!k[0].is_number() || !k[1].is_number()) fail(where, "knot entries must be numbers");
      e.knots.push_back({k[0].get<double>(), k[1].get<double>()});
    }
    return e;
  }
  fail(where, "unknown type \"" + type + "\"");
}

TrueLocation parse_true_location(const json& j) {
  const std::string where = "true_location";
  if (!j.is_object()) fail(where, "expected an object");
  if (j.contains("cell")) {
    check_keys(j, where, {"cell"});
    const json& c = j["cell"];
    if (!c.is_number_integer()) fail(where, "\"cell\" must be an integer");
    return c.get<CellId>();
  }
  check_keys(j, where, {"x", "y", "dim"});
  PointLocation p;
  p.x = get_number(j, where, "x");
  p.y = get_number_or(j, where, "y", 0.0);
  const auto it = j.find("dim");
  if (it != j.end()) {
    if (!it->is_number_integer()) fail(where, "\"dim\" must be 1 or 2");
    p.dim = it->get<int>();
  }
  return p;
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  const std::string where = "scenario";
  check_keys(j, where,
             {"schema", "name", "area", "distribution", "detection", "effort", "true_location"});
  const json& schema = get_required(j, where, "schema");
  if (!schema.is_number_integer() || schema.get<int>() != 1)
    fail(where, "unsupported schema version (expected 1)");
  if (j.contains("name") && !j["name"].is_string()) fail(where, "\"name\" must be a string");

  Scenario s;
  s.area = parse_area(get_required(j, where, "area"));
  s.distribution = parse_distribution(get_required(j, where, "distribution"));
  s.detection = parse_detection(get_required(j, where, "detection"));
  s.effort = parse_effort(get_required(j, where, "effort"));
  if (j.contains("true_location")) s.true_location = parse_true_location(j["true_location"]);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioParseError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ScenarioParseError(path + ": " + e.what());
  }
  return scenario_from_json(j);
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["schema"] = 1;

  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, CellArea>)
          j["area"] = {{"type", "cells"}, {"cells", a.cells}};
        else if constexpr (std::is_same_v<T, IntervalArea>)
          j["area"] = {{"type", "interval"}, {"a", a.a}, {"b", a.b}};
        else if constexpr (std::is_same_v<T, PlaneArea>)
          j["area"] = {{"type", "plane"}};
        else
          j["area"] = {{"type", "grid"}};
      },
      s.area);

  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, DiscreteTargetDistribution>) {
          json masses = json::object();
          for (const auto& [cell, mass] : d.masses) masses[std::to_string(cell)] = mass;
          j["distribution"] = {{"type", "discrete"}, {"masses", masses}};
        } else if constexpr (std::is_same_v<T, CircularNormal>) {
          j["distribution"] = {{"type", "circular_normal"}, {"sigma", d.sigma}};
        } else if constexpr (std::is_same_v<T, Uniform1D>) {
          j["distribution"] = {{"type", "uniform"}, {"a", d.a}, {"b", d.b}};
        } else {
          json cells = json::array();
          for (const GridCell& c : d.cells) cells.push_back({c.x, c.y, c.area, c.density});
          j["distribution"] = {{"type", "grid"}, {"dim", d.dim}, {"cells", cells}};
        }
      },
      s.distribution);

  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ExpHomogeneous>) {
          j["detection"] = {{"type", "exp"}, {"alpha", d.alpha}};
        } else if constexpr (std::is_same_v<T, ExpPerCell>) {
          json rates = json::object();
          for (const auto& [cell, alpha] : d.rates) rates[std::to_string(cell)] = alpha;
          j["detection"] = {{"type", "exp_per_cell"}, {"rates", rates}};
        } else if constexpr (std::is_same_v<T, ExpPiecewise1D>) {
          json pieces = json::array();
          for (const RatePiece& p : d.pieces)
            pieces.push_back({{"from", p.from}, {"to", p.to}, {"alpha", p.alpha}});
          j["detection"] = {{"type", "exp_piecewise"}, {"pieces", pieces}};
        } else {
          if (d.family != "power" || !d.params.count("scale") || !d.params.count("shape"))
            throw ScenarioParseError("cannot serialize a custom detection model");
          j["detection"] = {{"type", "power"},
                            {"scale", d.params.at("scale")},
                            {"shape", d.params.at("shape")}};
        }
      },
      s.detection);

  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, LinearEffort>) {
          j["effort"] = {{"type", "linear"}, {"rate", e.rate}, {"offset", e.offset}};
        } else {
          json knots = json::array();
          for (const EffortKnot& k : e.knots) knots.push_back({k.t, k.value});
          j["effort"] = {{"type", "table"}, {"knots", knots}};
        }
      },
      s.effort);

  if (s.true_location) {
    if (const auto* cell = std::get_if<CellId>(&*s.true_location)) {
      j["true_location"] = {{"cell", *cell}};
    } else {
      const PointLocation& p = std::get<PointLocation>(*s.true_location);
      j["true_location"] = {{"x", p.x}, {"y", p.y}, {"dim", p.dim}};
    }
  }
  return j;
}

void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ScenarioParseError("cannot open " + path + " for writing");
  out << scenario_to_json(s).dump(2) << "\n";
  if (!out) throw ScenarioParseError("failed writing " + path);
}

}  // namespace searchplan
