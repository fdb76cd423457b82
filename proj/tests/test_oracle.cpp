#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "searchplan/core.hpp"
#include "searchplan/evaluation.hpp"
#include "searchplan/field.hpp"
#include "searchplan/oracle.hpp"
#include "searchplan/planner.hpp"

using namespace searchplan;

namespace {

Scenario two_cell(double p) {
  Scenario s;
  s.area = CellArea{{1, 2}};
  s.distribution = DiscreteTargetDistribution{{{1, p}, {2, 1.0 - p}}};
  s.detection = ExpHomogeneous{1.0};
  s.effort = LinearEffort{1.0, 0.0};
  s.true_location = TrueLocation{CellId{1}};
  return s;
}

Scenario n_cells(int n) {
  Scenario s;
  DiscreteTargetDistribution d;
  CellArea area;
  for (int i = 1; i <= n; ++i) {
    d.masses[i] = 1.0 / n;
    area.cells.push_back(i);
  }
  s.area = area;
  s.distribution = d;
  s.detection = ExpHomogeneous{1.0};
  s.effort = LinearEffort{1.0, 0.0};
  s.true_location = TrueLocation{CellId{1}};
  return s;
}

}  // namespace

TEST_CASE("brute force tracks the planner up to its lattice resolution") {
  const Field f = materialize(two_cell(0.8));
  const BruteForceResult brute = brute_force_best_allocation(f, 2.0, 0.01);
  CHECK(brute.allocation.effort[0] + brute.allocation.effort[1] ==
        doctest::Approx(2.0).epsilon(1e-12));

  const Allocation planner = allocation_for_budget(f, 2.0);
  const double exact = subjective_probability(f, planner);
  CHECK(brute.probability <= exact + 1e-12);       // the planner is optimal
  CHECK(brute.probability >= exact - 0.01 * 0.8);  // lattice gap <= step * max q(0)
  CHECK(brute.allocation.effort[0] == doctest::Approx(1.69).epsilon(1e-9));
}

TEST_CASE("brute force puts everything on a lone cell") {
  const Field f = materialize(n_cells(1));
  const BruteForceResult brute = brute_force_best_allocation(f, 1.0, 0.25);
  CHECK(brute.allocation.effort[0] == doctest::Approx(1.0));
  CHECK(brute.probability == doctest::Approx(-std::expm1(-1.0)).epsilon(1e-12));
}

TEST_CASE("brute force guards its input") {
  CHECK_THROWS_AS(brute_force_best_allocation(materialize(n_cells(7)), 1.0, 0.5),
                  std::invalid_argument);  // too many cells
  const Field f = materialize(two_cell(0.8));
  CHECK_THROWS_AS(brute_force_best_allocation(f, 1.005, 0.01 * 3.0),
                  std::invalid_argument);  // budget off the lattice
  CHECK_THROWS_AS(brute_force_best_allocation(f, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(brute_force_best_allocation(materialize(n_cells(5)), 5.0, 1e-4),
                  std::invalid_argument);  // lattice too large to enumerate
  Scenario cont;
  cont.area = IntervalArea{-1.0, 1.0};
  cont.distribution = Uniform1D{-1.0, 1.0};
  cont.detection = ExpHomogeneous{1.0};
  cont.effort = LinearEffort{1.0, 0.0};
  CHECK_THROWS_AS(brute_force_best_allocation(materialize(cont), 1.0, 0.5),
                  std::invalid_argument);  // discrete only
}

TEST_CASE("greedy increments approach the optimal split") {
  const Field f = materialize(two_cell(0.8));
  const Allocation greedy = greedy_incremental_allocation(f, 2.0, 1e-4);
  CHECK(greedy.effort[0] + greedy.effort[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(greedy.effort[0] == doctest::Approx(1.6931471805599453).epsilon(4e-4));
  CHECK(greedy.effort[1] == doctest::Approx(0.3068528194400547).scale(1.0).epsilon(4e-4));

  // equal cells: the tie goes to the first, then alternates
  const Field eq = materialize(n_cells(2));
  const Allocation a = greedy_incremental_allocation(eq, 0.2, 0.1);
  CHECK(a.effort[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(a.effort[1] == doctest::Approx(0.1).epsilon(1e-12));

  // the final partial increment still lands the budget exactly
  const Allocation partial = greedy_incremental_allocation(f, 0.25, 0.1);
  CHECK(partial.effort[0] == doctest::Approx(0.25).epsilon(1e-12));

  CHECK_THROWS_AS(greedy_incremental_allocation(f, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(greedy_incremental_allocation(f, -1.0, 0.1), std::invalid_argument);
}

TEST_CASE("monte carlo is reproducible and calibrated") {
  const Field f = materialize(two_cell(0.8));
  const Allocation a = allocation_for_budget(f, 2.0);

  const MonteCarloResult r1 = monte_carlo_detection(f, a, 100000, 424243, false);
  const MonteCarloResult r2 = monte_carlo_detection(f, a, 100000, 424243, false);
  CHECK(r1.estimate == r2.estimate);  // same seed, same stream
  CHECK(r1.seed == 424243);
  CHECK(r1.trials == 100000);

  const MonteCarloResult r3 = monte_carlo_detection(f, a, 100000, 7, false);
  CHECK(r1.estimate != r3.estimate);

  const double exact = subjective_probability(f, a);
  CHECK(std::abs(r1.estimate - exact) <= 5.0 * r1.std_error + 1e-9);
  CHECK(r1.std_error ==
        doctest::Approx(std::sqrt(r1.estimate * (1.0 - r1.estimate) / 100000)).epsilon(1e-12));

  const MonteCarloResult t1 = monte_carlo_detection(f, a, 100000, 424243, true);
  CHECK(std::abs(t1.estimate - true_probability(f, a)) <= 5.0 * t1.std_error + 1e-9);

  // the error shrinks like 1/sqrt(n)
  const MonteCarloResult small = monte_carlo_detection(f, a, 1000, 424243, false);
  CHECK(small.std_error > 3.0 * r1.std_error);

  CHECK_THROWS_AS(monte_carlo_detection(f, a, 0, 1, false), std::invalid_argument);
  Allocation wrong;
  wrong.effort = {1.0};
  CHECK_THROWS_AS(monte_carlo_detection(f, wrong, 10, 1, false), std::invalid_argument);

  Scenario no_x0 = two_cell(0.8);
  no_x0.true_location.reset();
  const Field g = materialize(no_x0);
  const Allocation ga = allocation_for_budget(g, 2.0);
  CHECK_THROWS_AS(monte_carlo_detection(g, ga, 10, 1, true), std::invalid_argument);
}
