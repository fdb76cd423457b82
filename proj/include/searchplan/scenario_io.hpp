#pragma once

// JSON serialization of scenarios.
//
// Schema (version 1): a single object with keys
//   schema        : 1 (required)
//   name          : optional string, ignored by the loader
//   area          : {"type": "cells", "cells": [..]} | {"type": "interval",
//                   "a": .., "b": ..} | {"type": "plane"} | {"type": "grid"}
//   distribution  : {"type": "discrete", "masses": {"<id>": mass, ..}}
//                 | {"type": "circular_normal", "sigma": ..}
//                 | {"type": "uniform", "a": .., "b": ..}
//                 | {"type": "grid", "dim": 1|2,
//                    "cells": [[x, y, area, density], ..]}
//   detection     : {"type": "exp", "alpha": ..}
//                 | {"type": "exp_per_cell", "rates": {"<id>": alpha, ..}}
//                 | {"type": "exp_piecewise",
//                    "pieces": [{"from": .., "to": .., "alpha": ..}, ..]}
//                 | {"type": "power", "scale": .., "shape": ..}
//   effort        : {"type": "linear", "rate": .., "offset": ..}   (offset
//                   optional, default 0) | {"type": "table",
//                   "knots": [[t, value], ..]}
//   true_location : optional; {"cell": id} | {"x": .., "y": .., "dim": 1|2}
//                   (y and dim optional, defaults 0 and 1)
//
// Unknown keys are rejected everywhere. Parse problems raise
// ScenarioParseError; structural validity beyond the schema is the job of
// validate_scenario.

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "searchplan/core.hpp"

namespace searchplan {

class ScenarioParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);

// Inverse of the above. Custom detection models other than the named "power"
// family cannot round-trip and raise ScenarioParseError.
nlohmann::json scenario_to_json(const Scenario& s);
void save_scenario(const Scenario& s, const std::string& path);

}  // namespace searchplan
