#pragma once

// Constructions that strictly improve the true detection performance of the
// optimal plan by moving probability mass toward the target's actual cell.
//
// A plan that is optimal for the analyst's distribution can still be beaten
// under ground truth whenever that distribution is not already "as committed"
// to x0 as possible:
//   * misspecified models (x0 outside the support) are repaired by granting
//     x0 a small mass,
//   * discrete models swap x0's mass with a heavier cell (Case i) or, when
//     x0 already carries the maximal mass, concentrate more mass onto it
//     (Case ii) — the latter only helps once the effort budget exceeds the
//     level at which searching spills beyond x0,
//   * continuous models bump the density cell at x0 (or, for the analytic
//     families, shrink the support / the spread toward x0).
//
// Every returned construction is verified numerically: the improved
// distribution's optimal plan must dominate the original plan's true
// detection curve on the verification grid.

#include <optional>
#include <string>
#include <vector>

#include "searchplan/core.hpp"
#include "searchplan/evaluation.hpp"
#include "searchplan/field.hpp"

namespace searchplan {

enum class ImprovementKind {
  SupportExtension,   // repair of a misspecified model
  MassSwap,           // discrete, x0's mass below another cell's
  MassConcentration,  // discrete, x0 already maximal
  DensityBump,        // continuous, grid-level
  SupportShrink,      // uniform 1-D family
  SigmaShrink,        // circular-normal family
};

std::string to_string(ImprovementKind kind);

enum class ContinuousStrategy { DensityBump, SupportShrink, SigmaShrink };

struct ImprovementOptions {
  // Verification grid. Empty: 64 geometric points on [1e-3, T*], T* the last
  // doubling (from 2e-3, cap 1e3) that keeps the original plan's P# below
  // 1 - 1e-6 — past that the strict gap drowns in the dominance tolerance.
  std::vector<double> times;
  GridOptions grid;
  double epsilon = 0.01;   // repair mass granted to x0
  double theta = 0.5;      // concentration step toward x0
  double bump_factor = 1.5;
  int max_retries = 24;
};

struct ImprovementResult {
  // False means "no improvement guaranteed": x0 already holds the maximal
  // mass and the budget never clears the concentration threshold, so the
  // original plan spends everything on x0 anyway (its true curve is exactly
  // unchanged by concentrating further).
  bool improved = false;
  ImprovementKind kind = ImprovementKind::MassSwap;
  // Scenario with the improved distribution (area/detection adjusted where
  // the construction requires it). Meaningful when improved.
  Scenario scenario;
  // Improved plan vs original plan on the verification grid (p_first is the
  // improved plan's true curve).
  PlanComparison verification;
  // Case (ii) spill threshold q_x0^{-1}(q_second(0)); set for discrete
  // concentration outcomes, including the no-improvement one.
  std::optional<double> threshold;
  // The knob value the verified construction used (theta, bump factor,
  // sigma~, or b~, depending on the kind).
  std::optional<double> parameter;
};

// Grants mass epsilon to x0 (scaling everything else by 1-epsilon; continuous
// scenarios get an extra grid cell at x0) for a scenario whose x0 lies
// outside the computational support. Throws std::invalid_argument when the
// scenario is well-specified, lacks x0, or uses per-cell rates (no rate
// exists for the new cell).
ImprovementResult repair_misspecified(const Scenario& s, const ImprovementOptions& options = {});

// Theorem-style strict improvement for discrete scenarios with x0 in the
// support. Mass swap when some cell outweighs x0; otherwise concentration by
// theta with the threshold gate described above. Verification failures after
// the retry budget raise PlannerError.
ImprovementResult improve_discrete(const Scenario& s, const ImprovementOptions& options = {});

// Strict improvement for continuous scenarios with x0 inside the support.
ImprovementResult improve_continuous(const Scenario& s,
                                     ContinuousStrategy strategy = ContinuousStrategy::DensityBump,
                                     const ImprovementOptions& options = {});

// A cell whose mass is not maximal (the improvable witness): the smallest
// mass, ties to the lowest id. With all masses equal any cell qualifies, but
// only through the concentration route, whose guarantee depends on the
// effort threshold — flagged accordingly.
struct WitnessLocation {
  CellId cell = 0;
  bool threshold_dependent = false;
};
WitnessLocation find_witness_location(const DiscreteTargetDistribution& d);

}  // namespace searchplan
