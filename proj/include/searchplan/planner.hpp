#pragma once

// Uniformly optimal search plans via the rate-of-return construction.
//
// For a cell x with probability weight w and detection law d, the rate of
// return at cumulative effort y is q_x(y) = w * d'(y): the marginal
// probability bought by the next unit of effort at x. A budget K is spent
// optimally by levelling these rates: pick the rate lambda at which the
// aggregate effort Q(lambda) = sum_x area_x * q_x^{-1}(lambda) equals K and
// give every cell the effort q_x^{-1}(lambda). Because the same lambda works
// for every budget along an effort schedule, the resulting time-indexed plan
// is uniformly optimal: it maximizes detection probability at every time at
// once, not just at a horizon.
//
// All-exponential scenarios take an exact algebraic path (the aggregate curve
// is piecewise linear in ln lambda); anything else falls back to bracketed
// bisection on lambda.

#include <stdexcept>
#include <string>
#include <vector>

#include "searchplan/core.hpp"
#include "searchplan/field.hpp"

namespace searchplan {

// Internal-consistency failures of the construction itself (budget equality
// or monotonicity violated beyond tolerance, saturated aggregate curve, ...).
class PlannerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Budget-equality tolerances: |sum(effort*area) - K| <= tol * max(1, K).
inline constexpr double kBudgetTolDiscrete = 1e-9;
inline constexpr double kBudgetTolContinuous = 1e-3;
// Bisection stops when |Q(lambda) - K| <= this * max(1, K), or after the cap.
inline constexpr double kAggregateTol = 1e-10;
inline constexpr int kBisectionCap = 200;
// Per-location effort may not decrease along the grid beyond this (relative).
inline constexpr double kMonotoneTol = 1e-12;
// Funded cells must share their rate of return within this (relative).
inline constexpr double kLevelRateTol = 1e-8;

// ---------------------------------------------------------------------------
// Rate of return of a single cell
// ---------------------------------------------------------------------------

struct RateOfReturn {
  double weight = 0.0;
  DetectionKernel kernel;

  double initial() const { return weight * kernel.initial_deriv(); }
  double at(double y) const { return weight * kernel.detect_deriv(y); }
  // q^{-1}(lambda): the effort at which the rate has dropped to lambda; 0 when
  // the cell never reaches lambda (lambda >= q(0)). Throws for lambda <= 0.
  double inverse(double lambda) const;
};

inline RateOfReturn rate_of_return(const FieldCell& c) { return {c.weight, c.kernel}; }

// q_x^{-1} with the clamp described above.
double inverse_rate(const RateOfReturn& q, double lambda);

// Effort at a cell for a given log-rate; log form so that extreme budgets on
// the exponential path cannot underflow the rate itself.
double cell_effort_at_log_rate(const FieldCell& c, double log_lambda);

// ---------------------------------------------------------------------------
// Aggregate curve Q and its inverse
// ---------------------------------------------------------------------------

// Precomputed view of Q(lambda) = sum_x area_x q_x^{-1}(lambda) for one field.
// Keeps a reference to the field; the field must outlive the curve.
class AggregateCurve {
 public:
  explicit AggregateCurve(const Field& field);

  const Field& field() const { return *field_; }
  bool exact() const { return exact_; }  // all-exponential algebraic path
  double lambda_max() const { return lambda_max_; }

  // Q(lambda), lambda > 0.
  double total_effort(double lambda) const;
  // ln Q^{-1}(K), K >= 0. Exact on the algebraic path; bisection otherwise.
  double log_rate_at_budget(double budget) const;
  // Q^{-1}(K). May underflow to 0 for extreme budgets on the exact path;
  // prefer the log form for downstream arithmetic.
  double rate_at_budget(double budget) const;
  // Detection probability of the levelled allocation at this log-rate.
  // O(log n) on the exact path: funded cells contribute
  // w a (1 - lambda/(w alpha)), which telescopes over the sorted prefixes.
  double subjective_probability_at_log_rate(double log_lambda) const;

 private:
  const Field* field_;
  bool exact_ = true;
  double lambda_max_ = 0.0;
  // Sorted descending by threshold ln(w_i alpha_i); prefix sums give
  // Q(lambda) = prefix_c_[k] - prefix_s_[k] * ln(lambda) with k active cells.
  std::vector<double> log_thresholds_;
  std::vector<double> prefix_s_;  // sum of area_i / alpha_i
  std::vector<double> prefix_c_;  // sum of (area_i / alpha_i) * ln(w_i alpha_i)
  std::vector<double> prefix_w_;  // sum of w_i area_i (cell masses)

  double bisect_log_rate(double budget) const;
};

// One-shot helpers over a field (build the curve internally).
double aggregate_effort(const Field& f, double lambda);
double rate_at_budget(const Field& f, double budget);

// ---------------------------------------------------------------------------
// Allocations and plans
// ---------------------------------------------------------------------------

// Optimal split of budget K across the field (K >= 0). Asserts budget
// equality within tolerance; violations raise PlannerError.
Allocation allocation_for_budget(const AggregateCurve& curve, double budget);
Allocation allocation_for_budget(const Field& f, double budget);

// Allocation at time t under the scenario's effort schedule.
Allocation plan_at_time(const Field& f, const EffortSchedule& schedule, double t);

// Full plan over a strictly increasing grid of times (>= 0). Also enforces
// per-location monotonicity across the grid.
SearchPlan build_plan(const Field& f, const EffortSchedule& schedule,
                      const std::vector<double>& times);

// Re-checks the plan invariants (budget equality, monotonicity, level funded
// rates / no under-funded cell above them). Returns human-readable violations,
// empty when the plan is internally consistent.
std::vector<std::string> check_plan_invariants(const Field& f, const SearchPlan& plan,
                                               const EffortSchedule& schedule);

// ---------------------------------------------------------------------------
// Closed forms for the canonical families
// ---------------------------------------------------------------------------

// Two cells with masses (p, 1-p) and exponential rates (alpha1, alpha2).
// Effort first floods the cell with the larger initial rate p*alpha1 vs
// (1-p)*alpha2; past the threshold both cells are funded with level rates.
struct TwoCellEfforts {
  double first = 0.0;
  double second = 0.0;
};
TwoCellEfforts closed_form_two_cell(double p, double alpha1, double alpha2, double E);
// Effort at which the second cell starts receiving effort.
double two_cell_threshold(double p, double alpha1, double alpha2);

// Circular-normal target (sigma), homogeneous exponential detection (alpha),
// effort arriving at rate sweep_rate (so E(t) = sweep_rate * t). The optimal
// density is an inverted paraboloid over a disc of radius R(t).
struct CircularNormalPlan {
  double sigma = 1.0;
  double alpha = 1.0;
  double sweep_rate = 1.0;

  double h() const;                                 // sqrt(alpha*sweep/(pi sigma^2))
  double radius(double t) const;                    // R(t), R^2 = 2 sigma^2 h sqrt(t)
  double effort_density(double r, double t) const;  // 0 outside R(t)
  double subjective_probability(double t) const;    // 1-(1+h sqrt t) e^{-h sqrt t}
  double true_probability(double r0, double t) const;
};

// Uniform target on (a, b) with a < 0 < b; exponential rates beta1 on [0, b)
// and beta2 on (a, 0), beta1 > beta2 > 0. Returns the optimal effort density
// at x for budget E (0 outside (a, b)).
double closed_form_piecewise_uniform(double a, double b, double beta1, double beta2,
                                     double E, double x);
// Budget below which only the [0, b) side is searched: (b/beta1) ln(beta1/beta2).
double piecewise_uniform_threshold(double b, double beta1, double beta2);

}  // namespace searchplan
