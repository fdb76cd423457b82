#pragma once

// The computational view of a scenario: a flat list of cells the planner can
// allocate to. Discrete scenarios map one cell per probability mass;
// continuous scenarios are discretized on a structured grid (polar rings for
// the circular normal, equal intervals in 1-D) or taken verbatim from an
// explicit grid density. All downstream modules (planner, evaluation,
// improvement, oracle) work on this view.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "searchplan/core.hpp"

namespace searchplan {

// One allocatable cell. For discrete scenarios weight is the probability mass
// and area is 1; for continuous scenarios weight is the density at the cell
// centre and area is the cell measure, so weight*area is the cell's mass and
// allocations carry effort density.
struct FieldCell {
  std::string label;
  double weight = 0.0;
  double area = 1.0;
  DetectionKernel kernel;
  // Geometry, for reconstructing distributions (improvement) and reports:
  // discrete cells carry their id, continuous cells their centre coordinates.
  CellId id = 0;
  double x = 0.0;
  double y = 0.0;
};

struct Field {
  bool discrete = true;
  bool all_exponential = true;
  std::vector<FieldCell> cells;

  // Ground truth, when the scenario declares one. true_index is the cell
  // holding the true location; empty while has_true_location is set means the
  // location lies outside the (computational) support — the misspecified case.
  bool has_true_location = false;
  std::optional<std::size_t> true_index;

  // Maps a point to its cell for this field's geometry (empty for discrete
  // fields). Returns nothing for points outside the grid.
  std::function<std::optional<std::size_t>(const PointLocation&)> locate;

  double total_mass() const;  // sum(weight * area), ~1 up to quadrature error
};

// Discretization controls for the analytic continuous families.
struct GridOptions {
  int polar_radial_per_sigma = 50;      // radial step = sigma / this
  int polar_angular = 64;               // angular bins over [0, 2pi)
  double polar_truncation_sigmas = 6.0; // grid radius = this * sigma
  int line_cells = 2000;                // cells for 1-D interval families
};

// Truncating the circular normal at k sigmas must leave less than this much
// probability outside the grid; materialize() checks it.
inline constexpr double kTruncationTolerance = 1e-7;

// Builds the computational view. The scenario is assumed to have passed
// validate_scenario(); structural impossibilities still throw
// std::invalid_argument (e.g. a truncation radius leaving too much mass out,
// or a grid larger than kMaxCells).
Field materialize(const Scenario& s, const GridOptions& options = {});

}  // namespace searchplan
