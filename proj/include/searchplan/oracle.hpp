#pragma once

// Independent cross-checks for the planner. Nothing here knows about rates of
// return or water-filling; each oracle attacks the objective directly so that
// agreement with the planner is evidence, not circularity.

#include <cstdint>
#include <vector>

#include "searchplan/core.hpp"
#include "searchplan/field.hpp"

namespace searchplan {

struct BruteForceResult {
  Allocation allocation;
  double probability = 0.0;
};

// Exhaustive search over every split of round(budget/step) effort quanta
// among the cells of a discrete field. Exponential in the cell count, so it
// refuses fields with more than 6 cells or lattices beyond ~1e7 points.
BruteForceResult brute_force_best_allocation(const Field& f, double budget, double step);

// Greedy allocation: repeatedly gives the next effort increment to whichever
// cell buys the most detection probability for it (ties to the lowest cell
// index), with one final partial increment. Uses only the detection function
// itself, no derivatives; converges to the optimal split as the increment
// shrinks.
Allocation greedy_incremental_allocation(const Field& f, double budget, double increment);

struct MonteCarloResult {
  double estimate = 0.0;
  double std_error = 0.0;  // binomial, sqrt(p(1-p)/n)
  std::uint64_t seed = 0;
  int trials = 0;
};

// Simulates the search under an allocation. When use_true_location is set the
// target sits at the field's declared true cell (the field must have one);
// otherwise each trial draws the target from the subjective weights. Fully
// deterministic for a fixed seed, identical across platforms.
MonteCarloResult monte_carlo_detection(const Field& f, const Allocation& a, int trials,
                                       std::uint64_t seed, bool use_true_location);

}  // namespace searchplan
