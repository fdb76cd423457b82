#include "searchplan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace searchplan {

namespace {

void require_matching(const Field& f, const Allocation& a) {
  if (a.effort.size() != f.cells.size())
    throw std::invalid_argument("allocation does not match the field");
}

}  // namespace

double subjective_probability(const Field& f, const Allocation& a) {
  require_matching(f, a);
  KahanSum p;
  for (std::size_t i = 0; i < f.cells.size(); ++i) {
    const FieldCell& c = f.cells[i];
    if (!(c.weight > 0.0)) continue;
    p.add(c.weight * c.area * c.kernel.detect(a.effort[i]));
  }
  return p.value();
}

double true_probability(const Field& f, const Allocation& a) {
  require_matching(f, a);
  if (!f.has_true_location)
    throw std::invalid_argument("scenario declares no true target location");
  if (!f.true_index) return 0.0;  // misspecified: the plan never searches x0
  const FieldCell& c = f.cells[*f.true_index];
  return c.kernel.detect(a.effort[*f.true_index]);
}

// ---------------------------------------------------------------------------
// Mean time to detection
// ---------------------------------------------------------------------------

namespace {

double checked_probability(const std::function<double(double)>& p, double t) {
  const double v = p(t);
  if (!(v >= -1e-9) || !(v <= 1.0 + 1e-9))
    throw std::invalid_argument("probability curve left [0, 1] at t = " + std::to_string(t));
  return std::clamp(v, 0.0, 1.0);
}

// Composite trapezoid with interval doubling on [0, horizon].
double integrate_survivor(const std::function<double(double)>& p, double horizon,
                          const MeanTimeOptions& opt) {
  const auto g = [&](double t) { return 1.0 - checked_probability(p, t); };
  double estimate = 0.5 * (g(0.0) + g(horizon)) * horizon;
  std::size_t intervals = 1;
  for (int level = 1; level <= opt.max_doublings; ++level) {
    const double h = horizon / static_cast<double>(2 * intervals);
    KahanSum mids;
    for (std::size_t i = 0; i < intervals; ++i)
      mids.add(g((2.0 * static_cast<double>(i) + 1.0) * h));
    const double refined = 0.5 * estimate + h * mids.value();
    // A few levels are needed before the change is trustworthy (the curve may
    // have a kink where the plan starts funding a new cell).
    if (level >= 6 && std::abs(refined - estimate) <= opt.rel_tol * std::max(1.0, std::abs(refined))) {
      return refined;
    }
    estimate = refined;
    intervals *= 2;
  }
  return estimate;
}

}  // namespace

MeanTimeResult mean_time(const std::function<double(double)>& probability,
                         const MeanTimeOptions& options) {
  if (!probability) throw std::invalid_argument("mean_time needs a probability curve");

  MeanTimeResult out;
  double horizon = 1.0;
  double prev = checked_probability(probability, 0.0);
  while (true) {
    const double p = checked_probability(probability, horizon);
    if (p < prev - 1e-12)
      throw std::invalid_argument("probability curve decreases; mean time is undefined");
    prev = p;
    if (1.0 - p < options.tail_epsilon) break;
    if (horizon >= options.horizon_cap) {
      out.diverged = true;
      break;
    }
    horizon = std::min(horizon * 2.0, options.horizon_cap);
  }
  out.horizon = horizon;

  // Monotonicity spot-check on a uniform scan before integrating.
  double last = checked_probability(probability, 0.0);
  for (int i = 1; i <= 64; ++i) {
    const double t = horizon * (static_cast<double>(i) / 64.0);
    const double v = checked_probability(probability, t);
    if (v < last - 1e-12)
      throw std::invalid_argument("probability curve decreases; mean time is undefined");
    last = v;
  }

  out.value = integrate_survivor(probability, horizon, options);
  out.tail_estimate = (1.0 - checked_probability(probability, horizon)) * horizon;
  return out;
}

// ---------------------------------------------------------------------------
// Curve evaluator
// ---------------------------------------------------------------------------

CurveEvaluator::CurveEvaluator(const Field& f, const EffortSchedule& schedule)
    : field_(&f), schedule_(&schedule), curve_(f) {}

double CurveEvaluator::subjective(double t) const {
  const double budget = effort_at(*schedule_, t);
  if (budget <= 0.0) return 0.0;
  return curve_.subjective_probability_at_log_rate(curve_.log_rate_at_budget(budget));
}

double CurveEvaluator::true_prob(double t) const {
  if (!field_->has_true_location)
    throw std::invalid_argument("scenario declares no true target location");
  if (!field_->true_index) return 0.0;
  const double budget = effort_at(*schedule_, t);
  const FieldCell& c = field_->cells[*field_->true_index];
  if (budget <= 0.0) return c.kernel.detect(0.0);
  const double y = cell_effort_at_log_rate(c, curve_.log_rate_at_budget(budget));
  return c.kernel.detect(y);
}

// ---------------------------------------------------------------------------
// Whole-scenario evaluation
// ---------------------------------------------------------------------------

EvaluationReport evaluate(const Field& f, const EffortSchedule& schedule,
                          const std::vector<double>& times, const MeanTimeOptions& options) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0) throw std::invalid_argument("evaluation times must be non-negative");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw std::invalid_argument("evaluation times must be strictly increasing");
  }
  const CurveEvaluator eval(f, schedule);
  EvaluationReport report;
  report.times = times;
  report.has_true = f.has_true_location;

  double prev_t = 0.0;
  double prev_subj = eval.subjective(0.0);
  double prev_true = report.has_true ? eval.true_prob(0.0) : 0.0;
  KahanSum cum_subj, cum_true;
  for (double t : times) {
    report.budgets.push_back(effort_at(schedule, t));
    const double ps = eval.subjective(t);
    report.subjective.push_back(ps);
    cum_subj.add(0.5 * ((1.0 - prev_subj) + (1.0 - ps)) * (t - prev_t));
    report.subjective_mean_cum.push_back(cum_subj.value());
    if (report.has_true) {
      const double pt = eval.true_prob(t);
      report.true_prob.push_back(pt);
      cum_true.add(0.5 * ((1.0 - prev_true) + (1.0 - pt)) * (t - prev_t));
      report.true_mean_cum.push_back(cum_true.value());
      prev_true = pt;
    }
    prev_subj = ps;
    prev_t = t;
  }

  report.subjective_mean = mean_time([&](double t) { return eval.subjective(t); }, options);
  if (report.has_true)
    report.true_mean = mean_time([&](double t) { return eval.true_prob(t); }, options);
  return report;
}

// ---------------------------------------------------------------------------
// Plan comparison
// ---------------------------------------------------------------------------

std::string to_string(Dominance verdict) {
  switch (verdict) {
    case Dominance::StrictlyDominates: return "strictly-dominates";
    case Dominance::DominatesWithTies: return "dominates-with-ties";
    case Dominance::Dominated: return "dominated";
    case Dominance::Incomparable: return "incomparable";
  }
  return "unknown";
}

PlanComparison compare_plans(const Field& field_a, const SearchPlan& plan_a,
                             const Field& field_b, const SearchPlan& plan_b) {
  if (plan_a.times.size() != plan_b.times.size() || plan_a.times.empty())
    throw std::invalid_argument("plans must share one non-empty time grid");
  for (std::size_t k = 0; k < plan_a.times.size(); ++k)
    if (std::abs(plan_a.times[k] - plan_b.times[k]) > 1e-12 * std::max(1.0, plan_a.times[k]))
      throw std::invalid_argument("plans must share one non-empty time grid");

  PlanComparison cmp;
  cmp.times = plan_a.times;
  cmp.p_first.reserve(cmp.times.size());
  cmp.p_second.reserve(cmp.times.size());
  bool a_strict_everywhere = true, a_weak_everywhere = true;
  bool b_strict_somewhere = false, a_strict_somewhere = false, b_weak_everywhere = true;
  for (std::size_t k = 0; k < cmp.times.size(); ++k) {
    const double pa = true_probability(field_a, plan_a.allocations[k]);
    const double pb = true_probability(field_b, plan_b.allocations[k]);
    cmp.p_first.push_back(pa);
    cmp.p_second.push_back(pb);
    if (pa > pb + kDominanceTol)
      a_strict_somewhere = true;
    else
      a_strict_everywhere = false;
    if (pa < pb - kDominanceTol) {
      a_weak_everywhere = false;
      b_strict_somewhere = true;
    }
    if (pb < pa - kDominanceTol) b_weak_everywhere = false;
  }

  if (a_strict_everywhere)
    cmp.verdict = Dominance::StrictlyDominates;
  else if (a_weak_everywhere)
    cmp.verdict = Dominance::DominatesWithTies;
  else if (b_weak_everywhere && b_strict_somewhere && !a_strict_somewhere)
    cmp.verdict = Dominance::Dominated;
  else
    cmp.verdict = Dominance::Incomparable;

  KahanSum delta;  // trapezoid of (pa - pb) over the grid
  for (std::size_t k = 1; k < cmp.times.size(); ++k) {
    const double da = cmp.p_first[k] - cmp.p_second[k];
    const double dp = cmp.p_first[k - 1] - cmp.p_second[k - 1];
    delta.add(0.5 * (da + dp) * (cmp.times[k] - cmp.times[k - 1]));
  }
  cmp.true_mean_delta = delta.value();
  return cmp;
}

}  // namespace searchplan
