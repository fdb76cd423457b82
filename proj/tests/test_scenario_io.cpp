#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

#include "searchplan/core.hpp"
#include "searchplan/scenario_io.hpp"

using namespace searchplan;
using nlohmann::json;

namespace {

json base_doc() {
  return json::parse(R"({
    "schema": 1,
    "area": {"type": "cells", "cells": [1, 2]},
    "distribution": {"type": "discrete", "masses": {"1": 0.8, "2": 0.2}},
    "detection": {"type": "exp", "alpha": 1.0},
    "effort": {"type": "linear", "rate": 1.0},
    "true_location": {"cell": 1}
  })");
}

}  // namespace

TEST_CASE("parses the canonical discrete document") {
  const Scenario s = scenario_from_json(base_doc());
  const auto& d = std::get<DiscreteTargetDistribution>(s.distribution);
  CHECK(d.masses.at(1) == 0.8);
  CHECK(d.masses.at(2) == 0.2);
  CHECK(std::get<ExpHomogeneous>(s.detection).alpha == 1.0);
  CHECK(std::get<LinearEffort>(s.effort).rate == 1.0);
  CHECK(std::get<LinearEffort>(s.effort).offset == 0.0);  // optional, defaults
  REQUIRE(s.true_location.has_value());
  CHECK(std::get<CellId>(*s.true_location) == 1);
  CHECK(validate_scenario(s).valid());

  json named = base_doc();
  named["name"] = "anything";  // tolerated, ignored
  CHECK(validate_scenario(scenario_from_json(named)).valid());

  json no_x0 = base_doc();
  no_x0.erase("true_location");
  CHECK_FALSE(scenario_from_json(no_x0).true_location.has_value());
}

TEST_CASE("parses every family") {
  json doc = base_doc();
  doc["area"] = {{"type", "interval"}, {"a", -1.0}, {"b", 1.0}};
  doc["distribution"] = {{"type", "uniform"}, {"a", -1.0}, {"b", 1.0}};
  doc["detection"] = {{"type", "exp_piecewise"},
                      {"pieces", json::array({
                           json{{"from", -1.0}, {"to", 0.0}, {"alpha", 1.0}},
                           json{{"from", 0.0}, {"to", 1.0}, {"alpha", 3.0}},
                       })}};
  doc["effort"] = {{"type", "table"}, {"knots", json::array({
                       json::array({0.0, 0.0}), json::array({1.0, 2.0})})}};
  doc["true_location"] = {{"x", 0.25}, {"dim", 1}};
  const Scenario line = scenario_from_json(doc);
  CHECK(std::get<ExpPiecewise1D>(line.detection).pieces.size() == 2);
  CHECK(std::get<TableEffort>(line.effort).knots[1].value == 2.0);
  CHECK(std::get<PointLocation>(*line.true_location).dim == 1);
  CHECK(validate_scenario(line).valid());

  doc = base_doc();
  doc["area"] = {{"type", "plane"}};
  doc["distribution"] = {{"type", "circular_normal"}, {"sigma", 2.0}};
  doc["true_location"] = {{"x", 0.1}, {"y", -0.2}, {"dim", 2}};
  const Scenario plane = scenario_from_json(doc);
  CHECK(std::get<CircularNormal>(plane.distribution).sigma == 2.0);
  CHECK(validate_scenario(plane).valid());

  doc = base_doc();
  doc["area"] = {{"type", "grid"}};
  doc["distribution"] = {{"type", "grid"},
                         {"dim", 1},
                         {"cells", json::array({
                              json::array({0.0, 0.0, 0.5, 1.0}),
                              json::array({0.5, 0.0, 0.5, 0.6}),
                              json::array({1.0, 0.0, 0.5, 0.4}),
                          })}};
  doc["true_location"] = {{"x", 0.1}, {"dim", 1}};
  const Scenario grid = scenario_from_json(doc);
  CHECK(std::get<GridDensity>(grid.distribution).cells.size() == 3);
  CHECK(validate_scenario(grid).valid());

  doc = base_doc();
  doc["detection"] = {{"type", "power"}, {"scale", 1.0}, {"shape", 2.0}};
  const Scenario power = scenario_from_json(doc);
  CHECK(std::get<GenericRegular>(power.detection).family == "power");

  doc = base_doc();
  doc["detection"] = {{"type", "exp_per_cell"}, {"rates", json{{"1", 2.0}, {"2", 1.0}}}};
  CHECK(std::get<ExpPerCell>(scenario_from_json(doc).detection).rates.at(1) == 2.0);
}

TEST_CASE("rejects malformed documents") {
  const auto rejects = [](json doc) {
    CHECK_THROWS_AS((void)scenario_from_json(doc), ScenarioParseError);
  };

  json doc = base_doc();
  doc.erase("schema");
  rejects(doc);

  doc = base_doc();
  doc["schema"] = 2;
  rejects(doc);

  doc = base_doc();
  doc["surprise"] = true;  // unknown top-level key
  rejects(doc);

  doc = base_doc();
  doc["area"]["extra"] = 1;  // unknown nested key
  rejects(doc);

  doc = base_doc();
  doc["distribution"]["type"] = "nonesuch";
  rejects(doc);

  doc = base_doc();
  doc["distribution"]["masses"] = {{"zero", 1.0}};  // id must be an integer string
  rejects(doc);

  doc = base_doc();
  doc["distribution"]["masses"]["1"] = "0.8";  // mass must be a number
  rejects(doc);

  doc = base_doc();
  doc.erase("detection");
  rejects(doc);

  doc = base_doc();
  doc["detection"] = {{"type", "exp"}};  // missing alpha
  rejects(doc);

  doc = base_doc();
  doc["effort"] = {{"type", "table"}, {"knots", json::array({json::array({0.0})})}};
  rejects(doc);  // knots are [t, value] pairs

  doc = base_doc();
  doc["true_location"] = {{"cell", 1}, {"x", 0.0}};  // cell and point forms exclude
  rejects(doc);

  doc = base_doc();
  doc["true_location"] = {{"x", 0.0}, {"z", 1.0}};  // no such coordinate
  rejects(doc);

  doc = base_doc();
  doc["area"] = {{"type", "grid"}};
  doc["distribution"] = {{"type", "grid"}, {"dim", 1},
                         {"cells", json::array({json::array({0.0, 0.0, 1.0})})}};
  rejects(doc);  // grid rows are [x, y, area, density]

  rejects(json::array());
  rejects(json(42));
}

TEST_CASE("round-trips every serializable family") {
  const char* dir = std::getenv("SEARCHPLAN_SCENARIO_DIR");
  REQUIRE(dir != nullptr);
  const std::string root(dir);
  for (const char* name :
       {"two_cell.json", "two_cell_swap.json", "two_cell_stasis.json", "two_cell_offset.json",
        "two_rates.json", "circular_normal.json", "piecewise_uniform.json",
        "uniform_interval.json", "misspecified.json", "misspecified_uniform.json",
        "power_detection.json"}) {
    CAPTURE(name);
    const Scenario s = load_scenario(root + "/" + name);
    const json once = scenario_to_json(s);
    const Scenario back = scenario_from_json(once);
    const json twice = scenario_to_json(back);
    CHECK(once.dump() == twice.dump());
  }
}

TEST_CASE("saves and reloads through a file") {
  const Scenario s = scenario_from_json(base_doc());
  const std::string path = "/tmp/searchplan_io_roundtrip.json";
  save_scenario(s, path);
  const Scenario back = load_scenario(path);
  CHECK(scenario_to_json(back).dump() == scenario_to_json(s).dump());
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_scenario("/tmp/does_not_exist_searchplan.json"), ScenarioParseError);

  const std::string bad = "/tmp/searchplan_io_bad.json";
  {
    std::ofstream out(bad);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_scenario(bad), ScenarioParseError);
  std::remove(bad.c_str());
}

TEST_CASE("custom detection families cannot be serialized") {
  Scenario s = scenario_from_json(base_doc());
  GenericRegular g;
  g.prob = [](double y) { return y / (1.0 + y); };
  g.deriv = [](double y) { return 1.0 / ((1.0 + y) * (1.0 + y)); };
  g.deriv_inv = [](double r) { return 1.0 / std::sqrt(r) - 1.0; };
  g.family = "custom";
  s.detection = g;
  CHECK_THROWS_AS((void)scenario_to_json(s), ScenarioParseError);
}
