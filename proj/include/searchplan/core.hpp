#pragma once

// Core domain model for the search planner: target distributions over a
// possibility area, detection models, effort schedules, and the scenario
// bundle that the planner, evaluators and improvement constructions consume.
//
// Conventions used throughout:
//   * effort is cumulative and non-negative; for continuous areas the planner
//     works with effort *density* per cell,
//   * detection models are "regular": d(0) = 0, d' exists, is positive and
//     strictly decreasing in effort (diminishing returns),
//   * cost of effort is identically the effort itself (no cost weighting).

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace searchplan {

using CellId = int;  // discrete cells are labelled by positive integers

// ---------------------------------------------------------------------------
// Target distributions
// ---------------------------------------------------------------------------

// Probability masses on a finite cell set. Keys are the cell ids; every mass
// must be strictly positive and the total must be 1 within kMassTolerance.
struct DiscreteTargetDistribution {
  std::map<CellId, double> masses;
};

// Rotationally symmetric normal density on the plane, centred at the origin:
// pi(r) = exp(-r^2 / (2 sigma^2)) / (2 pi sigma^2).
struct CircularNormal {
  double sigma = 1.0;
};

// Uniform density 1/(b-a) on the open interval (a, b); a < 0 < b is required
// only by the two-rate closed form, not by the type itself.
struct Uniform1D {
  double a = 0.0;
  double b = 1.0;
};

// Explicit quadrature grid: each cell has a centre, an area (length in 1-D)
// and a density value. Total probability sum(density * area) must be 1 within
// kGridMassTolerance.
struct GridCell {
  double x = 0.0;
  double y = 0.0;  // unused when dim == 1
  double area = 0.0;
  double density = 0.0;
};
struct GridDensity {
  int dim = 1;  // 1 or 2
  std::vector<GridCell> cells;
};

using TargetDistribution =
    std::variant<DiscreteTargetDistribution, CircularNormal, Uniform1D, GridDensity>;

bool is_discrete(const TargetDistribution& d);

// ---------------------------------------------------------------------------
// Detection models
// ---------------------------------------------------------------------------

// d(y) = 1 - exp(-alpha y) everywhere.
struct ExpHomogeneous {
  double alpha = 1.0;
};

// Exponential detection with one rate per discrete cell.
struct ExpPerCell {
  std::map<CellId, double> rates;
};

// Exponential detection over a 1-D area with a piecewise-constant rate.
// Pieces must tile the area interval; a point x uses the piece with
// from <= x < to (the last piece is closed on the right).
struct RatePiece {
  double from = 0.0;
  double to = 0.0;
  double alpha = 1.0;
};
struct ExpPiecewise1D {
  std::vector<RatePiece> pieces;
};

// Arbitrary regular detection, spatially homogeneous: the caller supplies
// d(y), its effort-derivative, and the inverse of that derivative on
// (0, deriv(0)]. Regularity (d(0)=0, 0<=d<1, deriv positive and strictly
// decreasing, inverse consistent) is probed numerically by validate_scenario.
struct GenericRegular {
  std::function<double(double)> prob;
  std::function<double(double)> deriv;
  std::function<double(double)> deriv_inv;
  std::string family;                    // serialization label, e.g. "power"
  std::map<std::string, double> params;  // family parameters for round-trips
};

using DetectionModel = std::variant<ExpHomogeneous, ExpPerCell, ExpPiecewise1D, GenericRegular>;

// Builds the "power" regular family d(y) = 1 - (1 + y/scale)^-shape.
// Non-exponential, closed-form invertible derivative; used to exercise the
// numeric planner path. scale > 0, shape > 0.
GenericRegular make_power_detection(double scale, double shape);

// ---------------------------------------------------------------------------
// Detection kernels (per-location view of a detection model)
// ---------------------------------------------------------------------------

// Detection law at one location, with the three callables the planner needs.
// Exponential kernels are flagged so the planner can take the exact algebraic
// path; generic kernels carry the user callables.
struct DetectionKernel {
  bool exponential = true;
  double alpha = 1.0;  // meaningful when exponential
  std::function<double(double)> prob;
  std::function<double(double)> deriv;
  std::function<double(double)> deriv_inv;

  // d(y): probability that effort y finds a target at this location.
  double detect(double y) const;
  // d'(y): marginal detection rate at effort y. Positive, strictly decreasing.
  double detect_deriv(double y) const;
  // (d')^{-1}(r) for 0 < r <= d'(0). Caller is responsible for the clamp.
  double detect_deriv_inv(double r) const;
  // d'(0), the initial marginal rate.
  double initial_deriv() const;
};

// ---------------------------------------------------------------------------
// Effort schedules
// ---------------------------------------------------------------------------

// E(t) = offset + rate * t. rate >= 0, offset >= 0, rate + offset > 0
// (constant schedules are allowed; identically-zero ones are not).
struct LinearEffort {
  double rate = 1.0;
  double offset = 0.0;
};

// Piecewise-linear E through (t, value) knots; first knot must sit at t = 0,
// knot times strictly increasing, values weakly increasing, and E(t) > 0 for
// every t > 0. Constant continuation beyond the last knot.
struct EffortKnot {
  double t = 0.0;
  double value = 0.0;
};
struct TableEffort {
  std::vector<EffortKnot> knots;
};

using EffortSchedule = std::variant<LinearEffort, TableEffort>;

// Cumulative effort available at time t >= 0.
double effort_at(const EffortSchedule& schedule, double t);

// ---------------------------------------------------------------------------
// Possibility area and scenario
// ---------------------------------------------------------------------------

struct CellArea {
  std::vector<CellId> cells;
};
struct IntervalArea {
  double a = 0.0;
  double b = 1.0;
};
struct PlaneArea {};
struct ImplicitGridArea {};  // the grid distribution itself carries the geometry

using PossibilityArea = std::variant<CellArea, IntervalArea, PlaneArea, ImplicitGridArea>;

// Where the target actually is (ground truth): a discrete cell, or a point in
// a continuous area (dim = 1 uses only x).
struct PointLocation {
  double x = 0.0;
  double y = 0.0;
  int dim = 1;
};
using TrueLocation = std::variant<CellId, PointLocation>;

struct Scenario {
  PossibilityArea area;
  TargetDistribution distribution;
  DetectionModel detection;
  EffortSchedule effort;
  std::optional<TrueLocation> true_location;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

inline constexpr double kMassTolerance = 1e-12;      // discrete masses sum to 1
inline constexpr double kGridMassTolerance = 1e-6;   // grid density*area sums to 1
inline constexpr std::size_t kMaxCells = 1'000'000;  // cap on materialized cells

struct ValidationReport {
  std::vector<std::string> violations;  // empty means the scenario is valid
  std::vector<std::string> notes;       // e.g. whether existence preconditions hold
  bool valid() const { return violations.empty(); }
};

// Structural validation + numeric regularity probe of generic detection.
// Notes report whether the optimal-plan existence preconditions hold
// (finite area or integrable density; regular detection).
ValidationReport validate_scenario(const Scenario& s);

// Detection probability for effort y at an explicit location. Throws
// std::invalid_argument for negative y or a location the model cannot
// resolve (e.g. cell id missing from a per-cell rate map).
double detection_probability_of_effort(const DetectionModel& m, const TrueLocation& at,
                                       double y);

// Resolves the detection law at a location. Same error contract as above.
DetectionKernel kernel_at(const DetectionModel& m, const TrueLocation& at);

// ---------------------------------------------------------------------------
// Allocations and plans
// ---------------------------------------------------------------------------

// One snapshot of effort spread over the field cells. `effort[i]` is effort
// (discrete) or effort density (continuous) on cell i; `budget` is the total
// sum(effort * area) it was built for.
struct Allocation {
  std::vector<double> effort;
  double budget = 0.0;
};

// Allocations over a time grid; allocations[k] corresponds to times[k] and
// per-cell effort is non-decreasing along the grid.
struct SearchPlan {
  std::vector<double> times;
  std::vector<Allocation> allocations;
};

// Geometric grid of n points on [lo, hi] (n >= 2, 0 < lo < hi), used as the
// default evaluation grid.
std::vector<double> geometric_grid(double lo, double hi, int n);

// Compensated (Kahan) running sum; several invariants here live or die on
// the quality of long reductions over grid cells.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

}  // namespace searchplan
