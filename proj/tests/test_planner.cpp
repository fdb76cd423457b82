#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "searchplan/core.hpp"
#include "searchplan/field.hpp"
#include "searchplan/planner.hpp"

using namespace searchplan;

namespace {

Scenario two_cell(double p, double rate = 1.0, double offset = 0.0) {
  Scenario s;
  s.area = CellArea{{1, 2}};
  s.distribution = DiscreteTargetDistribution{{{1, p}, {2, 1.0 - p}}};
  s.detection = ExpHomogeneous{1.0};
  s.effort = LinearEffort{rate, offset};
  s.true_location = TrueLocation{CellId{1}};
  return s;
}

Scenario piecewise_line() {
  Scenario s;
  s.area = IntervalArea{-1.0, 1.0};
  s.distribution = Uniform1D{-1.0, 1.0};
  s.detection = ExpPiecewise1D{{{-1.0, 0.0, 1.0}, {0.0, 1.0, 3.0}}};
  s.effort = LinearEffort{1.0, 0.0};
  s.true_location = TrueLocation{PointLocation{0.0, 0.0, 1}};
  return s;
}

}  // namespace

TEST_CASE("rate of return: exponential inverse with clamping") {
  FieldCell c;
  c.weight = 0.8;
  c.area = 1.0;
  c.kernel = kernel_at(ExpHomogeneous{1.0}, TrueLocation{CellId{1}});
  const RateOfReturn q = rate_of_return(c);
  CHECK(q.initial() == 0.8);
  CHECK(q.at(2.0) == doctest::Approx(0.8 * std::exp(-2.0)).epsilon(1e-14));
  CHECK(q.inverse(0.4) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(q.inverse(0.8) == 0.0);
  CHECK(q.inverse(5.0) == 0.0);  // rates above q(0) mean "do not search yet"
  CHECK_THROWS_AS(q.inverse(0.0), std::invalid_argument);
  CHECK_THROWS_AS(q.inverse(-1.0), std::invalid_argument);
}

TEST_CASE("two-cell closed form: frozen values") {
  // p = 0.8, common rate: threshold ln 4, split (E + ln4)/2 past it
  CHECK(two_cell_threshold(0.8, 1.0, 1.0) == doctest::Approx(1.3862943611198906).epsilon(1e-15));
  const TwoCellEfforts at2 = closed_form_two_cell(0.8, 1.0, 1.0, 2.0);
  CHECK(at2.first == doctest::Approx(1.6931471805599453).epsilon(1e-15));
  CHECK(at2.second == doctest::Approx(0.3068528194400547).epsilon(1e-15));
  const TwoCellEfforts at1 = closed_form_two_cell(0.8, 1.0, 1.0, 1.0);
  CHECK(at1.first == 1.0);
  CHECK(at1.second == 0.0);

  // distinct rates, favoured cell still floods first
  CHECK(two_cell_threshold(0.8, 2.0, 1.0) ==
        doctest::Approx(0.5 * std::log(8.0)).epsilon(1e-15));
  const TwoCellEfforts mixed = closed_form_two_cell(0.8, 2.0, 1.0, 2.0);
  CHECK(mixed.first == doctest::Approx(1.3598138472266120).epsilon(1e-15));
  CHECK(mixed.second == doctest::Approx(0.6401861527733880).epsilon(1e-15));

  // second cell floods first when (1-p) alpha2 > p alpha1
  CHECK(two_cell_threshold(0.6, 1.0, 3.0) ==
        doctest::Approx(0.2310490601866484).epsilon(1e-15));
  const TwoCellEfforts rev = closed_form_two_cell(0.6, 1.0, 3.0, 2.0);
  CHECK(rev.first == doctest::Approx(1.3267132048600137).epsilon(1e-15));
  CHECK(rev.second == doctest::Approx(0.6732867951399863).epsilon(1e-15));
  const TwoCellEfforts below = closed_form_two_cell(0.6, 1.0, 3.0, 0.1);
  CHECK(below.first == 0.0);
  CHECK(below.second == 0.1);

  CHECK_THROWS_AS(closed_form_two_cell(1.0, 1.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(closed_form_two_cell(0.5, 0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("aggregate curve: exact exponential path") {
  const Field f = materialize(two_cell(0.8));
  const AggregateCurve curve(f);
  CHECK(curve.exact());
  CHECK(curve.lambda_max() == 0.8);
  CHECK(curve.total_effort(0.8) == 0.0);
  CHECK(curve.total_effort(0.9) == 0.0);

  const double lambda2 = 0.14715177646857693;  // level at budget 2
  CHECK(curve.total_effort(lambda2) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(curve.log_rate_at_budget(2.0) == doctest::Approx(std::log(lambda2)).epsilon(1e-13));
  CHECK(curve.rate_at_budget(0.0) == doctest::Approx(0.8).epsilon(1e-14));

  for (const double K : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0})
    CHECK(curve.total_effort(curve.rate_at_budget(K)) == doctest::Approx(K).epsilon(1e-10));

  // subjective value at the level of budget 2 (telescoped form)
  CHECK(curve.subjective_probability_at_log_rate(std::log(lambda2)) ==
        doctest::Approx(0.7056964470628461).epsilon(1e-13));
}

TEST_CASE("allocation: budget split matches the closed form") {
  const Field f = materialize(two_cell(0.8));
  const Allocation a = allocation_for_budget(f, 2.0);
  REQUIRE(a.effort.size() == 2);
  CHECK(a.budget == 2.0);
  CHECK(a.effort[0] == doctest::Approx(1.6931471805599453).epsilon(1e-12));
  CHECK(a.effort[1] == doctest::Approx(0.3068528194400547).epsilon(1e-12));

  const Allocation zero = allocation_for_budget(f, 0.0);
  CHECK(zero.effort[0] == 0.0);
  CHECK(zero.effort[1] == 0.0);

  const Allocation below = allocation_for_budget(f, 1.0);
  CHECK(below.effort[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(below.effort[1] == 0.0);

  CHECK_THROWS_AS(allocation_for_budget(f, -1.0), std::invalid_argument);
}

TEST_CASE("bisection path agrees with the algebraic path") {
  // same exponential law wrapped as a generic family forces the numeric path
  GenericRegular g;
  g.prob = [](double y) { return -std::expm1(-y); };
  g.deriv = [](double y) { return std::exp(-y); };
  g.deriv_inv = [](double r) { return -std::log(r); };
  g.family = "custom";

  Scenario exact = two_cell(0.8);
  Scenario numeric = two_cell(0.8);
  numeric.detection = g;
  REQUIRE(validate_scenario(numeric).valid());

  const Field fe = materialize(exact);
  const Field fn = materialize(numeric);
  CHECK_FALSE(AggregateCurve(fn).exact());
  for (const double K : {0.3, 1.0, 2.0, 7.0}) {
    const Allocation ae = allocation_for_budget(fe, K);
    const Allocation an = allocation_for_budget(fn, K);
    CHECK(an.effort[0] == doctest::Approx(ae.effort[0]).epsilon(1e-8));
    CHECK(an.effort[1] == doctest::Approx(ae.effort[1]).epsilon(1e-8));
  }
}

TEST_CASE("power detection plans satisfy the invariants") {
  Scenario s = two_cell(0.6);
  s.detection = make_power_detection(1.0, 2.0);
  REQUIRE(validate_scenario(s).valid());
  const Field f = materialize(s);
  const SearchPlan plan = build_plan(f, s.effort, geometric_grid(0.1, 50.0, 24));
  CHECK(check_plan_invariants(f, plan, s.effort).empty());
}

TEST_CASE("build_plan: budgets, monotonicity, invariant checker") {
  const Scenario s = two_cell(0.8, 1.0, 0.0);
  const Field f = materialize(s);
  const auto times = geometric_grid(1e-3, 1e3, 64);
  const SearchPlan plan = build_plan(f, s.effort, times);
  REQUIRE(plan.times.size() == 64);
  REQUIRE(plan.allocations.size() == 64);
  for (std::size_t k = 0; k < plan.times.size(); ++k) {
    const Allocation& a = plan.allocations[k];
    CHECK(a.effort[0] + a.effort[1] == doctest::Approx(plan.times[k]).epsilon(1e-12));
    if (k > 0) {
      CHECK(a.effort[0] >= plan.allocations[k - 1].effort[0]);
      CHECK(a.effort[1] >= plan.allocations[k - 1].effort[1]);
    }
  }
  CHECK(check_plan_invariants(f, plan, s.effort).empty());

  SearchPlan broken = plan;
  broken.allocations[40].effort[0] += 0.1;
  CHECK_FALSE(check_plan_invariants(f, broken, s.effort).empty());

  CHECK_THROWS_AS(build_plan(f, s.effort, std::vector<double>{1.0, 1.0}),
                  std::invalid_argument);

  // constant schedule: every allocation equals the offset split
  const Scenario st = two_cell(0.8, 0.0, 1.0);
  const SearchPlan stale = build_plan(f, st.effort, geometric_grid(0.1, 10.0, 8));
  for (const Allocation& a : stale.allocations) {
    CHECK(a.effort[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.effort[1] == 0.0);
  }
  CHECK(check_plan_invariants(f, stale, st.effort).empty());
}

TEST_CASE("plan_at_time matches allocation at the scheduled budget") {
  const Scenario s = two_cell(0.8, 2.0, 0.5);
  const Field f = materialize(s);
  const Allocation a = plan_at_time(f, s.effort, 0.75);  // budget 2
  CHECK(a.budget == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(a.effort[0] == doctest::Approx(1.6931471805599453).epsilon(1e-12));
}

TEST_CASE("circular normal plan: frozen subjective curve and geometry") {
  CircularNormalPlan plan;
  plan.sigma = 1.0;
  plan.alpha = 1.0;
  plan.sweep_rate = 3.141592653589793;
  CHECK(plan.h() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(plan.radius(1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(plan.subjective_probability(1.0) ==
        doctest::Approx(0.2642411176571153).epsilon(1e-14));
  CHECK(plan.subjective_probability(0.0) == 0.0);

  // the density integrates to the scheduled effort pi * t
  const double t = 2.5;
  const double R = plan.radius(t);
  const int n = 20000;
  KahanSum total;
  for (int i = 0; i < n; ++i) {
    const double r = (i + 0.5) * R / n;
    total.add(plan.effort_density(r, t) * 2.0 * 3.141592653589793 * r * (R / n));
  }
  CHECK(total.value() == doctest::Approx(3.141592653589793 * t).epsilon(1e-6));

  CHECK(plan.effort_density(R * 1.01, t) == 0.0);
  CHECK(plan.true_probability(0.0, 1.0) == doctest::Approx(-std::expm1(-1.0)).epsilon(1e-12));
  CHECK(plan.true_probability(10.0, 1.0) == 0.0);
  CHECK_THROWS_AS(plan.true_probability(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("piecewise uniform closed form: four branches") {
  const double a = -1.0, b = 1.0, b1 = 3.0, b2 = 1.0;
  CHECK(piecewise_uniform_threshold(b, b1, b2) ==
        doctest::Approx(0.3662040962227032).epsilon(1e-15));

  // below threshold only the fast side is searched
  CHECK(closed_form_piecewise_uniform(a, b, b1, b2, 0.2, 0.5) ==
        doctest::Approx(0.2).epsilon(1e-14));
  CHECK(closed_form_piecewise_uniform(a, b, b1, b2, 0.2, -0.5) == 0.0);

  // above threshold both sides hold the common rate level
  const double fast = closed_form_piecewise_uniform(a, b, b1, b2, 2.0, 0.5);
  const double slow = closed_form_piecewise_uniform(a, b, b1, b2, 2.0, -0.5);
  CHECK(fast == doctest::Approx(0.7746530721670274).epsilon(1e-14));
  CHECK(slow == doctest::Approx(2.0 - 0.7746530721670274).epsilon(1e-13));
  CHECK(fast * b + slow * (-a) == doctest::Approx(2.0).epsilon(1e-13));

  CHECK(closed_form_piecewise_uniform(a, b, b1, b2, 0.0, 0.5) == 0.0);
  CHECK_THROWS_AS(closed_form_piecewise_uniform(a, b, b2, b1, 1.0, 0.5),
                  std::invalid_argument);  // needs beta1 > beta2
  CHECK_THROWS_AS(closed_form_piecewise_uniform(1.0, 2.0, b1, b2, 1.0, 1.5),
                  std::invalid_argument);  // interval must straddle 0
}

TEST_CASE("gridded piecewise planner tracks the closed form") {
  const Scenario s = piecewise_line();
  const Field f = materialize(s);
  const Allocation alloc = allocation_for_budget(f, 2.0);
  const auto density_near = [&](double x) {
    const auto i = f.locate(PointLocation{x, 0.0, 1});
    REQUIRE(i.has_value());
    return alloc.effort[*i];
  };
  CHECK(density_near(0.5) ==
        doctest::Approx(closed_form_piecewise_uniform(-1, 1, 3, 1, 2.0, 0.5)).epsilon(1e-2));
  CHECK(density_near(-0.5) ==
        doctest::Approx(closed_form_piecewise_uniform(-1, 1, 3, 1, 2.0, -0.5)).epsilon(1e-2));
}
