#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "searchplan/core.hpp"
#include "searchplan/evaluation.hpp"
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

Scenario one_cell(DetectionModel m) {
  Scenario s;
  s.area = CellArea{{1}};
  s.distribution = DiscreteTargetDistribution{{{1, 1.0}}};
  s.detection = std::move(m);
  s.effort = LinearEffort{1.0, 0.0};
  s.true_location = TrueLocation{CellId{1}};
  return s;
}

}  // namespace

TEST_CASE("subjective and true detection at the frozen budget") {
  const Field f = materialize(two_cell(0.8));
  const Allocation a = allocation_for_budget(f, 2.0);
  CHECK(subjective_probability(f, a) == doctest::Approx(0.7056964470628461).epsilon(1e-13));
  CHECK(true_probability(f, a) == doctest::Approx(0.8160602794142788).epsilon(1e-13));

  Scenario no_x0 = two_cell(0.8);
  no_x0.true_location.reset();
  const Field g = materialize(no_x0);
  CHECK_THROWS_AS(true_probability(g, allocation_for_budget(g, 1.0)), std::invalid_argument);

  Scenario missp = two_cell(0.8);
  missp.true_location = TrueLocation{CellId{3}};
  const Field h = materialize(missp);
  CHECK(true_probability(h, allocation_for_budget(h, 1.0)) == 0.0);

  Allocation wrong;
  wrong.effort = {1.0};
  CHECK_THROWS_AS(subjective_probability(f, wrong), std::invalid_argument);
}

TEST_CASE("mean time: exact exponential integral and divergence") {
  const auto mu1 = mean_time([](double t) { return -std::expm1(-t); });
  CHECK_FALSE(mu1.diverged);
  CHECK(mu1.value == doctest::Approx(1.0).epsilon(1e-6));

  const auto mu_half = mean_time([](double t) { return -std::expm1(-2.0 * t); });
  CHECK(mu_half.value == doctest::Approx(0.5).epsilon(1e-6));

  const auto stuck = mean_time([](double) { return 0.5; });
  CHECK(stuck.diverged);
  CHECK(stuck.horizon == doctest::Approx(1e6));
  CHECK(stuck.tail_estimate > 0.0);

  CHECK_THROWS_AS(mean_time([](double t) { return t < 1.0 ? 0.9 : 0.5; }),
                  std::invalid_argument);
  CHECK_THROWS_AS(mean_time(std::function<double(double)>{}), std::invalid_argument);
}

TEST_CASE("evaluate: frozen mean detection times") {
  const auto times = geometric_grid(1e-3, 1e3, 64);

  // p = 0.8, E(t) = t: true mean 1/p, subjective mean 0.2 ln4 + 1.4
  const Scenario s8 = two_cell(0.8);
  const EvaluationReport r8 = evaluate(materialize(s8), s8.effort, times);
  CHECK(r8.has_true);
  CHECK_FALSE(r8.true_mean.diverged);
  CHECK(r8.true_mean.value == doctest::Approx(1.25).epsilon(1e-6));
  CHECK(r8.subjective_mean.value == doctest::Approx(1.6772588722239781).epsilon(1e-6));

  const Scenario s6 = two_cell(0.6);
  const EvaluationReport r6 = evaluate(materialize(s6), s6.effort, times);
  CHECK(r6.true_mean.value == doctest::Approx(1.0 / 0.6).epsilon(1e-6));

  // offset ln 9 funds the second cell from t = 0: true mean drops to 1/3
  const Scenario off = two_cell(0.8, 1.0, 2.1972245773362196);
  const EvaluationReport ro = evaluate(materialize(off), off.effort, times);
  CHECK(ro.true_mean.value == doctest::Approx(1.0 / 3.0).epsilon(1e-6));

  // constant budget never finishes the search: diverged mean
  const Scenario st = two_cell(0.8, 0.0, 1.0);
  const EvaluationReport rs = evaluate(materialize(st), st.effort, times);
  CHECK(rs.true_mean.diverged);
  CHECK(rs.subjective_mean.diverged);
}

TEST_CASE("evaluate: report columns are consistent") {
  const Scenario s = two_cell(0.8, 2.0, 0.25);
  const Field f = materialize(s);
  const auto times = geometric_grid(0.01, 20.0, 32);
  const EvaluationReport r = evaluate(f, s.effort, times);

  REQUIRE(r.times.size() == times.size());
  REQUIRE(r.budgets.size() == times.size());
  REQUIRE(r.subjective.size() == times.size());
  REQUIRE(r.true_prob.size() == times.size());
  REQUIRE(r.subjective_mean_cum.size() == times.size());
  REQUIRE(r.true_mean_cum.size() == times.size());

  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK(r.budgets[k] == doctest::Approx(2.0 * times[k] + 0.25).epsilon(1e-12));
    const Allocation a = allocation_for_budget(f, r.budgets[k]);
    CHECK(r.subjective[k] == doctest::Approx(subjective_probability(f, a)).epsilon(1e-12));
    CHECK(r.true_prob[k] == doctest::Approx(true_probability(f, a)).epsilon(1e-12));
    if (k > 0) {
      CHECK(r.subjective[k] >= r.subjective[k - 1]);
      CHECK(r.true_mean_cum[k] >= r.true_mean_cum[k - 1]);
    }
  }

  // cumulative column = trapezoid of 1 - P# from 0, anchored at the offset
  // budget already spent at t = 0
  KahanSum manual;
  double prev_t = 0.0;
  double prev_q = 1.0 - true_probability(f, plan_at_time(f, s.effort, 0.0));
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double q = 1.0 - r.true_prob[k];
    manual.add(0.5 * (q + prev_q) * (times[k] - prev_t));
    prev_t = times[k];
    prev_q = q;
  }
  CHECK(r.true_mean_cum.back() == doctest::Approx(manual.value()).epsilon(1e-9));

  Scenario no_x0 = two_cell(0.8);
  no_x0.true_location.reset();
  const EvaluationReport rn = evaluate(materialize(no_x0), no_x0.effort, times);
  CHECK_FALSE(rn.has_true);
  CHECK(rn.true_prob.empty());
  CHECK(rn.true_mean_cum.empty());
}

TEST_CASE("curve evaluator matches the report columns") {
  const Scenario s = two_cell(0.75, 1.5, 0.0);
  const Field f = materialize(s);
  const CurveEvaluator eval(f, s.effort);
  const auto times = geometric_grid(0.05, 30.0, 16);
  const EvaluationReport r = evaluate(f, s.effort, times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK(eval.subjective(times[k]) == doctest::Approx(r.subjective[k]).epsilon(1e-12));
    CHECK(eval.true_prob(times[k]) == doctest::Approx(r.true_prob[k]).epsilon(1e-12));
  }
}

TEST_CASE("plan comparison: all four verdicts") {
  const auto times = geometric_grid(1e-3, 50.0, 48);

  const Field strong = materialize(two_cell(0.8));
  const Field weak = materialize(two_cell(0.6));
  const EffortSchedule sched = LinearEffort{1.0, 0.0};
  const SearchPlan plan_strong = build_plan(strong, sched, times);
  const SearchPlan plan_weak = build_plan(weak, sched, times);

  // both spend everything on cell 1 below their thresholds: early ties
  const PlanComparison ties = compare_plans(strong, plan_strong, weak, plan_weak);
  CHECK(ties.verdict == Dominance::DominatesWithTies);
  CHECK(ties.true_mean_delta > 0.0);

  const PlanComparison dominated = compare_plans(weak, plan_weak, strong, plan_strong);
  CHECK(dominated.verdict == Dominance::Dominated);
  CHECK(dominated.true_mean_delta < 0.0);

  const PlanComparison self = compare_plans(strong, plan_strong, strong, plan_strong);
  CHECK(self.verdict == Dominance::DominatesWithTies);
  CHECK(self.true_mean_delta == 0.0);

  // slow exponential vs power law: the curves cross
  const Scenario sa = one_cell(ExpHomogeneous{0.5});
  const Scenario sb = one_cell(make_power_detection(1.0, 2.0));
  const Field fa = materialize(sa);
  const Field fb = materialize(sb);
  const auto wide = geometric_grid(0.1, 10.0, 16);
  const PlanComparison crossing =
      compare_plans(fa, build_plan(fa, sa.effort, wide), fb, build_plan(fb, sb.effort, wide));
  CHECK(crossing.verdict == Dominance::Incomparable);

  // strict dominance: same field, uniformly larger budgets
  const SearchPlan richer = build_plan(strong, EffortSchedule{LinearEffort{2.0, 0.5}}, times);
  const PlanComparison strict = compare_plans(strong, richer, strong, plan_strong);
  CHECK(strict.verdict == Dominance::StrictlyDominates);
  CHECK(to_string(strict.verdict) == "strictly-dominates");

  SearchPlan offgrid = plan_strong;
  offgrid.times[3] *= 1.5;
  CHECK_THROWS_AS(compare_plans(strong, plan_strong, strong, offgrid), std::invalid_argument);
}
