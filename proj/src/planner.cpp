#include "searchplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace searchplan {

namespace {

constexpr double kPi = 3.14159265358979323846264338328;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

double budget_tolerance(const Field& f, double budget) {
  const double rel = f.discrete ? kBudgetTolDiscrete : kBudgetTolContinuous;
  return rel * std::max(1.0, budget);
}

}  // namespace

// ---------------------------------------------------------------------------
// Rate of return
// ---------------------------------------------------------------------------

double RateOfReturn::inverse(double lambda) const {
  if (!(lambda > 0.0)) throw std::invalid_argument("rate level must be positive");
  const double q0 = initial();
  if (lambda >= q0) return 0.0;
  const double y = kernel.detect_deriv_inv(lambda / weight);
  return std::max(y, 0.0);
}

double inverse_rate(const RateOfReturn& q, double lambda) { return q.inverse(lambda); }

double cell_effort_at_log_rate(const FieldCell& c, double log_lambda) {
  if (!(c.weight > 0.0)) return 0.0;
  if (c.kernel.exponential) {
    // q^{-1}(lambda) = (ln(w a) - ln lambda) / a, clamped at 0.
    const double log_q0 = std::log(c.weight * c.kernel.alpha);
    return std::max(0.0, (log_q0 - log_lambda) / c.kernel.alpha);
  }
  const double lambda = std::exp(log_lambda);
  return rate_of_return(c).inverse(lambda);
}

// ---------------------------------------------------------------------------
// Aggregate curve
// ---------------------------------------------------------------------------

AggregateCurve::AggregateCurve(const Field& field) : field_(&field) {
  struct Entry {
    double log_thr;
    double s;
    double mass;
  };
  std::vector<Entry> entries;
  entries.reserve(field.cells.size());
  for (const FieldCell& c : field.cells) {
    if (!(c.weight > 0.0)) continue;  // dead cells never receive effort
    const double q0 = c.weight * c.kernel.initial_deriv();
    lambda_max_ = std::max(lambda_max_, q0);
    exact_ = exact_ && c.kernel.exponential;
    if (c.kernel.exponential)
      entries.push_back({std::log(q0), c.area / c.kernel.alpha, c.weight * c.area});
  }
  if (!(lambda_max_ > 0.0))
    throw std::invalid_argument("field has no cell with positive initial rate");
  if (!exact_) return;

  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.log_thr > b.log_thr; });
  log_thresholds_.resize(entries.size());
  prefix_s_.resize(entries.size());
  prefix_c_.resize(entries.size());
  prefix_w_.resize(entries.size());
  long double s = 0.0L, c = 0.0L, w = 0.0L;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    log_thresholds_[i] = entries[i].log_thr;
    s += entries[i].s;
    c += static_cast<long double>(entries[i].s) * entries[i].log_thr;
    w += entries[i].mass;
    prefix_s_[i] = static_cast<double>(s);
    prefix_c_[i] = static_cast<double>(c);
    prefix_w_[i] = static_cast<double>(w);
  }
}

double AggregateCurve::total_effort(double lambda) const {
  if (!(lambda > 0.0)) throw std::invalid_argument("rate level must be positive");
  if (exact_) {
    const double log_lambda = std::log(lambda);
    // Number of cells whose threshold exceeds lambda (sorted descending).
    const auto it = std::partition_point(log_thresholds_.begin(), log_thresholds_.end(),
                                         [&](double thr) { return thr > log_lambda; });
    const std::size_t k = static_cast<std::size_t>(it - log_thresholds_.begin());
    if (k == 0) return 0.0;
    return std::max(0.0, prefix_c_[k - 1] - prefix_s_[k - 1] * log_lambda);
  }
  KahanSum q;
  for (const FieldCell& c : field_->cells) {
    if (!(c.weight > 0.0)) continue;
    q.add(c.area * rate_of_return(c).inverse(lambda));
  }
  return q.value();
}

double AggregateCurve::log_rate_at_budget(double budget) const {
  if (budget < 0.0) throw std::invalid_argument("budget must be non-negative");
  if (!exact_) return bisect_log_rate(budget);
  const std::size_t n = log_thresholds_.size();
  // Smallest regime k (1-based: top-k cells active) whose lower edge already
  // aggregates at least the budget; within it Q is linear in ln lambda.
  std::size_t lo = 1, hi = n;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const double edge = prefix_c_[mid - 1] - prefix_s_[mid - 1] * log_thresholds_[mid];
    if (edge >= budget)
      hi = mid;
    else
      lo = mid + 1;
  }
  return (prefix_c_[lo - 1] - budget) / prefix_s_[lo - 1];
}

double AggregateCurve::bisect_log_rate(double budget) const {
  if (budget == 0.0) return std::log(lambda_max_);
  double hi = lambda_max_;
  double lo = lambda_max_;
  // Geometric shrink until the bracket encloses the budget.
  for (int i = 0; total_effort(lo) < budget; ++i) {
    if (lo < 1e-300 || i > 2100)
      throw PlannerError("aggregate curve saturates before reaching budget " + fmt(budget));
    lo *= 0.5;
  }
  const double tol = kAggregateTol * std::max(1.0, budget);
  double mid = lo;
  for (int i = 0; i < kBisectionCap; ++i) {
    mid = 0.5 * (lo + hi);
    const double q = total_effort(mid);
    if (std::abs(q - budget) <= tol) return std::log(mid);
    if (q >= budget)
      lo = mid;
    else
      hi = mid;
  }
  return std::log(0.5 * (lo + hi));
}

double AggregateCurve::rate_at_budget(double budget) const {
  return std::exp(log_rate_at_budget(budget));
}

double AggregateCurve::subjective_probability_at_log_rate(double log_lambda) const {
  if (exact_) {
    const auto it = std::partition_point(log_thresholds_.begin(), log_thresholds_.end(),
                                         [&](double thr) { return thr > log_lambda; });
    const std::size_t k = static_cast<std::size_t>(it - log_thresholds_.begin());
    if (k == 0) return 0.0;
    // P = sum_funded w a - lambda * sum_funded a/alpha.
    return prefix_w_[k - 1] - std::exp(log_lambda) * prefix_s_[k - 1];
  }
  KahanSum p;
  for (const FieldCell& c : field_->cells) {
    if (!(c.weight > 0.0)) continue;
    const double y = cell_effort_at_log_rate(c, log_lambda);
    p.add(c.weight * c.area * c.kernel.detect(y));
  }
  return p.value();
}

double aggregate_effort(const Field& f, double lambda) {
  return AggregateCurve(f).total_effort(lambda);
}

double rate_at_budget(const Field& f, double budget) {
  return AggregateCurve(f).rate_at_budget(budget);
}

// ---------------------------------------------------------------------------
// Allocations and plans
// ---------------------------------------------------------------------------

Allocation allocation_for_budget(const AggregateCurve& curve, double budget) {
  if (budget < 0.0) throw std::invalid_argument("budget must be non-negative");
  const Field& f = curve.field();
  Allocation a;
  a.budget = budget;
  a.effort.assign(f.cells.size(), 0.0);
  if (budget == 0.0) return a;

  const double log_lambda = curve.log_rate_at_budget(budget);
  KahanSum spent;
  for (std::size_t i = 0; i < f.cells.size(); ++i) {
    const double y = cell_effort_at_log_rate(f.cells[i], log_lambda);
    a.effort[i] = y;
    spent.add(y * f.cells[i].area);
  }
  const double err = std::abs(spent.value() - budget);
  if (err > budget_tolerance(f, budget))
    throw PlannerError("budget equality violated: allocated " + fmt(spent.value()) +
                       " for budget " + fmt(budget));
  return a;
}

Allocation allocation_for_budget(const Field& f, double budget) {
  return allocation_for_budget(AggregateCurve(f), budget);
}

Allocation plan_at_time(const Field& f, const EffortSchedule& schedule, double t) {
  return allocation_for_budget(f, effort_at(schedule, t));
}

SearchPlan build_plan(const Field& f, const EffortSchedule& schedule,
                      const std::vector<double>& times) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0) throw std::invalid_argument("plan times must be non-negative");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw std::invalid_argument("plan times must be strictly increasing");
  }
  SearchPlan plan;
  plan.times = times;
  plan.allocations.reserve(times.size());
  const AggregateCurve curve(f);
  for (double t : times)
    plan.allocations.push_back(allocation_for_budget(curve, effort_at(schedule, t)));

  // The construction is monotone by design (a larger budget lowers the level
  // rate); anything beyond round-off is an internal error.
  for (std::size_t k = 1; k < plan.allocations.size(); ++k) {
    const auto& prev = plan.allocations[k - 1].effort;
    const auto& cur = plan.allocations[k].effort;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const double slack = kMonotoneTol * std::max(1.0, std::abs(prev[i]));
      if (cur[i] < prev[i] - slack)
        throw PlannerError("per-location effort decreased between t=" + fmt(plan.times[k - 1]) +
                           " and t=" + fmt(plan.times[k]));
    }
  }
  return plan;
}

std::vector<std::string> check_plan_invariants(const Field& f, const SearchPlan& plan,
                                               const EffortSchedule& schedule) {
  std::vector<std::string> issues;
  if (plan.times.size() != plan.allocations.size()) {
    issues.push_back("plan grid and allocation count differ");
    return issues;
  }
  for (std::size_t k = 0; k < plan.times.size(); ++k) {
    const double t = plan.times[k];
    const Allocation& a = plan.allocations[k];
    if (a.effort.size() != f.cells.size()) {
      issues.push_back("allocation size mismatch at t=" + fmt(t));
      continue;
    }
    const double budget = effort_at(schedule, t);
    KahanSum spent;
    for (std::size_t i = 0; i < a.effort.size(); ++i) spent.add(a.effort[i] * f.cells[i].area);
    if (std::abs(spent.value() - budget) > budget_tolerance(f, budget))
      issues.push_back("budget equality fails at t=" + fmt(t) + ": " + fmt(spent.value()) +
                       " vs " + fmt(budget));

    // Water-filling optimality: funded cells share one rate of return; no
    // unfunded cell may start above it.
    double level_lo = std::numeric_limits<double>::infinity();
    double level_hi = 0.0;
    double idle_max = 0.0;
    bool any_funded = false;
    for (std::size_t i = 0; i < a.effort.size(); ++i) {
      const FieldCell& c = f.cells[i];
      if (!(c.weight > 0.0)) continue;
      const RateOfReturn q = rate_of_return(c);
      if (a.effort[i] > 0.0) {
        const double r = q.at(a.effort[i]);
        level_lo = std::min(level_lo, r);
        level_hi = std::max(level_hi, r);
        any_funded = true;
      } else {
        idle_max = std::max(idle_max, q.initial());
      }
    }
    if (any_funded) {
      if (level_hi - level_lo > kLevelRateTol * level_hi)
        issues.push_back("funded rates of return are not level at t=" + fmt(t) + ": [" +
                         fmt(level_lo) + ", " + fmt(level_hi) + "]");
      if (idle_max > level_hi * (1.0 + kLevelRateTol))
        issues.push_back("an unfunded cell outranks the funded level at t=" + fmt(t));
    } else if (budget > budget_tolerance(f, budget)) {
      issues.push_back("no cell funded despite positive budget at t=" + fmt(t));
    }
  }
  for (std::size_t k = 1; k < plan.allocations.size(); ++k) {
    const auto& prev = plan.allocations[k - 1].effort;
    const auto& cur = plan.allocations[k].effort;
    for (std::size_t i = 0; i < cur.size() && i < prev.size(); ++i) {
      const double slack = kMonotoneTol * std::max(1.0, std::abs(prev[i]));
      if (cur[i] < prev[i] - slack) {
        issues.push_back("per-location effort decreases at grid step " + std::to_string(k));
        break;
      }
    }
  }
  return issues;
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

double two_cell_threshold(double p, double alpha1, double alpha2) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
  if (!(alpha1 > 0.0 && alpha2 > 0.0))
    throw std::invalid_argument("detection rates must be positive");
  const double ratio = (p * alpha1) / ((1.0 - p) * alpha2);
  if (ratio >= 1.0) return std::log(ratio) / alpha1;  // cell 1 floods first
  return -std::log(ratio) / alpha2;                   // cell 2 floods first
}

TwoCellEfforts closed_form_two_cell(double p, double alpha1, double alpha2, double E) {
  if (E < 0.0) throw std::invalid_argument("budget must be non-negative");
  const double thr = two_cell_threshold(p, alpha1, alpha2);
  const double L = std::log((p * alpha1) / ((1.0 - p) * alpha2));
  TwoCellEfforts out;
  if (L >= 0.0) {
    if (E <= thr) {
      out.first = E;
      return out;
    }
    out.first = (alpha2 * E + L) / (alpha1 + alpha2);
    out.second = (alpha1 * E - L) / (alpha1 + alpha2);
    return out;
  }
  if (E <= thr) {
    out.second = E;
    return out;
  }
  out.second = (alpha1 * E - L) / (alpha1 + alpha2);
  out.first = (alpha2 * E + L) / (alpha1 + alpha2);
  return out;
}

double CircularNormalPlan::h() const {
  return std::sqrt(alpha * sweep_rate / (kPi * sigma * sigma));
}

double CircularNormalPlan::radius(double t) const {
  if (t < 0.0) throw std::invalid_argument("time must be non-negative");
  return sigma * std::sqrt(2.0 * h() * std::sqrt(t));
}

double CircularNormalPlan::effort_density(double r, double t) const {
  if (r < 0.0 || t < 0.0) throw std::invalid_argument("radius and time must be non-negative");
  const double v = h() * std::sqrt(t) - (r * r) / (2.0 * sigma * sigma);
  return v > 0.0 ? v / alpha : 0.0;
}

double CircularNormalPlan::subjective_probability(double t) const {
  if (t < 0.0) throw std::invalid_argument("time must be non-negative");
  const double u = h() * std::sqrt(t);
  return 1.0 - (1.0 + u) * std::exp(-u);
}

double CircularNormalPlan::true_probability(double r0, double t) const {
  return -std::expm1(-alpha * effort_density(r0, t));
}

double piecewise_uniform_threshold(double b, double beta1, double beta2) {
  if (!(beta1 > beta2 && beta2 > 0.0))
    throw std::invalid_argument("rates must satisfy beta1 > beta2 > 0");
  if (!(b > 0.0)) throw std::invalid_argument("b must be positive");
  return (b / beta1) * std::log(beta1 / beta2);
}

double closed_form_piecewise_uniform(double a, double b, double beta1, double beta2,
                                     double E, double x) {
  if (!(a < 0.0 && 0.0 < b)) throw std::invalid_argument("interval must satisfy a < 0 < b");
  if (E < 0.0) throw std::invalid_argument("budget must be non-negative");
  const double thr = piecewise_uniform_threshold(b, beta1, beta2);
  if (!(x > a && x < b)) return 0.0;
  const bool right = x >= 0.0;
  if (E <= thr) return right ? E / b : 0.0;
  const double L = std::log(beta1 / beta2);
  const double D = b / beta1 - a / beta2;  // positive: a < 0
  if (right) return (E - (a / beta2) * L) / (beta1 * D);
  return (E - (b / beta1) * L) / (beta2 * D);
}

}  // namespace searchplan
