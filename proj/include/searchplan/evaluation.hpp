#pragma once

// Evaluating plans under the analyst's model and under ground truth.
//
// The subjective detection probability integrates the analyst's distribution
// against the detection law: it is what the planner optimizes. The true
// probability conditions on where the target actually is: d(x0, effort at
// x0). A plan built from a misspecified model (x0 outside the support) never
// touches x0, so its true probability is identically zero and the expected
// time to detection diverges.

#include <functional>
#include <vector>

#include "searchplan/core.hpp"
#include "searchplan/field.hpp"
#include "searchplan/planner.hpp"

namespace searchplan {

// P[f] = sum w_i area_i d_i(effort_i). Effort vector must match the field.
double subjective_probability(const Field& f, const Allocation& a);

// P#[f] = d(x0, effort at x0's cell); 0 when x0 lies outside the
// computational support. Throws std::invalid_argument when the scenario
// never declared a true location.
double true_probability(const Field& f, const Allocation& a);

// ---------------------------------------------------------------------------
// Mean time to detection
// ---------------------------------------------------------------------------

struct MeanTimeOptions {
  double tail_epsilon = 1e-8;  // stop growing the horizon once 1-P drops below
  double horizon_cap = 1e6;    // declare divergence past this horizon
  double rel_tol = 1e-9;       // trapezoid refinement stop
  int max_doublings = 20;      // at most 2^20 trapezoid intervals
};

struct MeanTimeResult {
  bool diverged = false;
  double value = 0.0;          // integral of 1-P over [0, horizon]
  double tail_estimate = 0.0;  // (1 - P(horizon)) * horizon, reported not added
  double horizon = 0.0;
};

// mu = integral of (1 - P(t)) dt for a non-decreasing probability curve.
// The horizon doubles geometrically from 1 until the tail drops below
// tail_epsilon; hitting the cap first marks the result diverged (the value
// then carries the truncated integral). Decreasing curves are rejected.
MeanTimeResult mean_time(const std::function<double(double)>& probability,
                         const MeanTimeOptions& options = {});

// ---------------------------------------------------------------------------
// Whole-scenario evaluation and plan comparison
// ---------------------------------------------------------------------------

struct EvaluationReport {
  std::vector<double> times;
  std::vector<double> budgets;
  std::vector<double> subjective;
  std::vector<double> true_prob;  // empty when the scenario has no x0
  // Running truncated integral of 1-P up to each grid time (trapezoid,
  // anchored at t=0).
  std::vector<double> subjective_mean_cum;
  std::vector<double> true_mean_cum;
  MeanTimeResult subjective_mean;
  MeanTimeResult true_mean;
  bool has_true = false;
};

EvaluationReport evaluate(const Field& f, const EffortSchedule& schedule,
                          const std::vector<double>& times,
                          const MeanTimeOptions& options = {});

// Pointwise comparison of two plans by true detection probability. The plans
// may live on different fields (e.g. original vs improved distribution) but
// must share the same time grid. "first" refers to plan a.
enum class Dominance {
  StrictlyDominates,  // P#_a > P#_b at every grid time
  DominatesWithTies,  // P#_a >= P#_b everywhere, not strict everywhere
  Dominated,          // P#_b >= P#_a everywhere, strictly somewhere
  Incomparable,
};

// P# values closer than this are ties.
inline constexpr double kDominanceTol = 1e-12;

std::string to_string(Dominance verdict);

struct PlanComparison {
  Dominance verdict = Dominance::Incomparable;
  // Truncated mean-time difference mu#(b) - mu#(a) over the shared grid
  // horizon: positive when plan a finds the target sooner.
  double true_mean_delta = 0.0;
  std::vector<double> times;
  std::vector<double> p_first;
  std::vector<double> p_second;
};

PlanComparison compare_plans(const Field& field_a, const SearchPlan& plan_a,
                             const Field& field_b, const SearchPlan& plan_b);

// Fast P(t)/P#(t) curves sharing one aggregate curve; useful wherever many
// time points are probed (mean-time integration, sweeps).
class CurveEvaluator {
 public:
  CurveEvaluator(const Field& f, const EffortSchedule& schedule);

  double subjective(double t) const;
  double true_prob(double t) const;  // same contract as true_probability()

 private:
  const Field* field_;
  const EffortSchedule* schedule_;
  AggregateCurve curve_;
};

}  // namespace searchplan
