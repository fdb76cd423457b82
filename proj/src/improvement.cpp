#include "searchplan/improvement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "searchplan/planner.hpp"

namespace searchplan {

namespace {

// Verification happens where a strict improvement is representable in double
// precision: once the original plan's true curve saturates (P# -> 1), both
// curves agree to within the dominance tolerance and pointwise strictness is
// meaningless. The horizon doubles while the *next* doubling still has
// 1 - P# above 1e-6, so the grid ends on the last point safely before
// saturation (capped at 1e3; a misspecified original, P# = 0, uses the cap).
std::vector<double> verification_grid(const Field& original, const EffortSchedule& schedule,
                                      const ImprovementOptions& options) {
  if (!options.times.empty()) {
    for (std::size_t i = 0; i < options.times.size(); ++i) {
      if (!(options.times[i] > 0.0))
        throw std::invalid_argument("verification times must be positive");
      if (i > 0 && !(options.times[i] > options.times[i - 1]))
        throw std::invalid_argument("verification times must be strictly increasing");
    }
    return options.times;
  }
  const CurveEvaluator eval(original, schedule);
  double horizon = 2e-3;
  while (horizon < 1e3 && eval.true_prob(std::min(horizon * 2.0, 1e3)) < 1.0 - 1e-6)
    horizon *= 2.0;
  return geometric_grid(1e-3, std::min(horizon, 1e3), 64);
}

void require_valid(const Scenario& improved) {
  const ValidationReport report = validate_scenario(improved);
  if (!report.valid()) {
    std::string msg = "improved scenario fails validation:";
    for (const std::string& v : report.violations) msg += "\n  " + v;
    throw PlannerError(msg);
  }
}

void require_valid_input(const Scenario& s) {
  const ValidationReport report = validate_scenario(s);
  if (!report.valid()) {
    std::string msg = "scenario fails validation:";
    for (const std::string& v : report.violations) msg += "\n  " + v;
    throw std::invalid_argument(msg);
  }
}

PlanComparison verify_improvement(const Scenario& original, const Scenario& improved,
                                  const std::vector<double>& grid,
                                  const ImprovementOptions& options) {
  require_valid(improved);
  const Field f_orig = materialize(original, options.grid);
  const Field f_new = materialize(improved, options.grid);
  const SearchPlan p_orig = build_plan(f_orig, original.effort, grid);
  const SearchPlan p_new = build_plan(f_new, improved.effort, grid);
  return compare_plans(f_new, p_new, f_orig, p_orig);
}

const PointLocation& point_location(const Scenario& s) {
  if (!s.true_location) throw std::invalid_argument("scenario declares no true target location");
  const PointLocation* pt = std::get_if<PointLocation>(&*s.true_location);
  if (!pt) throw std::invalid_argument("continuous improvement needs a point true location");
  return *pt;
}

int grid_dim(const TargetDistribution& d) {
  if (std::holds_alternative<CircularNormal>(d)) return 2;
  if (const auto* g = std::get_if<GridDensity>(&d)) return g->dim;
  return 1;
}

// Clips a piecewise rate model to a shrunken interval (a, b_new).
DetectionModel clip_detection(const DetectionModel& m, double b_new) {
  const auto* pw = std::get_if<ExpPiecewise1D>(&m);
  if (!pw) return m;
  ExpPiecewise1D out;
  for (const RatePiece& p : pw->pieces) {
    if (p.from >= b_new) break;
    RatePiece q = p;
    q.to = std::min(q.to, b_new);
    out.pieces.push_back(q);
  }
  return out;
}

}  // namespace

std::string to_string(ImprovementKind kind) {
  switch (kind) {
    case ImprovementKind::SupportExtension: return "support-extension";
    case ImprovementKind::MassSwap: return "mass-swap";
    case ImprovementKind::MassConcentration: return "mass-concentration";
    case ImprovementKind::DensityBump: return "density-bump";
    case ImprovementKind::SupportShrink: return "support-shrink";
    case ImprovementKind::SigmaShrink: return "sigma-shrink";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Repair of misspecified models
// ---------------------------------------------------------------------------

ImprovementResult repair_misspecified(const Scenario& s, const ImprovementOptions& options) {
  require_valid_input(s);
  if (!s.true_location) throw std::invalid_argument("scenario declares no true target location");
  const double eps = options.epsilon;
  if (!(eps >= 1e-6) || !(eps < 1.0))
    throw std::invalid_argument("repair mass must lie in [1e-6, 1) (non-degeneracy floor)");

  const Field field = materialize(s, options.grid);
  if (field.true_index)
    throw std::invalid_argument("scenario is well-specified; nothing to repair");

  Scenario improved = s;
  if (field.discrete) {
    if (std::holds_alternative<ExpPerCell>(s.detection))
      throw std::invalid_argument(
          "cannot repair a per-cell detection model: no rate exists for the new cell");
    const CellId x0 = std::get<CellId>(*s.true_location);
    DiscreteTargetDistribution nd;
    for (const auto& [cell, mass] : std::get<DiscreteTargetDistribution>(s.distribution).masses)
      nd.masses[cell] = mass * (1.0 - eps);
    nd.masses[x0] = eps;
    improved.distribution = nd;
    CellArea area = std::get<CellArea>(s.area);
    area.cells.push_back(x0);
    std::sort(area.cells.begin(), area.cells.end());
    improved.area = area;
  } else {
    const PointLocation& x0 = point_location(s);
    // The new cell must be resolvable by the detection model.
    try {
      kernel_at(s.detection, *s.true_location);
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument(
          "cannot repair: the detection model has no rate at the true location");
    }
    const double total = field.total_mass();
    const double scale = (1.0 - eps) / total;
    GridDensity nd;
    nd.dim = grid_dim(s.distribution);
    nd.cells.reserve(field.cells.size() + 1);
    double mean_area = 0.0;
    for (const FieldCell& c : field.cells) {
      nd.cells.push_back({c.x, c.y, c.area, c.weight * scale});
      mean_area += c.area;
    }
    mean_area /= static_cast<double>(field.cells.size());
    nd.cells.push_back({x0.x, x0.y, mean_area, eps / mean_area});
    improved.distribution = nd;
    improved.area = ImplicitGridArea{};
  }

  ImprovementResult result;
  result.kind = ImprovementKind::SupportExtension;
  result.parameter = eps;
  const std::vector<double> grid = verification_grid(field, s.effort, options);
  result.verification = verify_improvement(s, improved, grid, options);
  // The repaired cell is funded only once the budget clears its entry level,
  // so early grid times may tie the (identically zero) original curve; any
  // regression, however, is an internal error.
  if (result.verification.verdict != Dominance::StrictlyDominates &&
      result.verification.verdict != Dominance::DominatesWithTies)
    throw PlannerError("repair verification found a regression against the original plan");
  result.improved = true;
  result.scenario = std::move(improved);
  return result;
}

// ---------------------------------------------------------------------------
// Discrete improvements (mass swap / concentration)
// ---------------------------------------------------------------------------

ImprovementResult improve_discrete(const Scenario& s, const ImprovementOptions& options) {
  require_valid_input(s);
  const auto* dist = std::get_if<DiscreteTargetDistribution>(&s.distribution);
  if (!dist) throw std::invalid_argument("improve_discrete needs a discrete distribution");
  if (!s.true_location) throw std::invalid_argument("scenario declares no true target location");
  const CellId x0 = std::get<CellId>(*s.true_location);
  const auto it0 = dist->masses.find(x0);
  if (it0 == dist->masses.end())
    throw std::invalid_argument("true location lies outside the support; repair it first");
  if (dist->masses.size() < 2)
    throw std::invalid_argument("distribution is a point mass; nothing to improve");

  const double m0 = it0->second;
  CellId partner = 0;
  double m1 = -1.0;
  for (const auto& [cell, mass] : dist->masses) {
    if (cell == x0) continue;
    if (mass > m1) {  // ties resolve to the lowest id via map order
      m1 = mass;
      partner = cell;
    }
  }

  const Field field = materialize(s, options.grid);
  const std::vector<double> grid = verification_grid(field, s.effort, options);

  ImprovementResult result;
  if (m1 > m0) {
    // Case (i): swapping the masses of x0 and the heaviest cell leaves the
    // aggregate curve untouched (the cells trade places in the water-filling
    // order) while strictly raising the effort x0 receives.
    Scenario improved = s;
    DiscreteTargetDistribution nd = *dist;
    nd.masses[x0] = m1;
    nd.masses[partner] = m0;
    improved.distribution = nd;
    result.kind = ImprovementKind::MassSwap;
    result.verification = verify_improvement(s, improved, grid, options);
    if (result.verification.verdict != Dominance::StrictlyDominates)
      throw PlannerError("mass swap failed strict-dominance verification");
    if (!(result.verification.true_mean_delta > 0.0))
      throw PlannerError("mass swap did not reduce the truncated mean time");
    result.improved = true;
    result.scenario = std::move(improved);
    return result;
  }

  // Case (ii): x0 already carries the maximal mass. Concentrating helps only
  // once the budget pushes the search beyond x0; below that level the plan
  // spends everything on x0 with or without concentration.
  FieldCell second_cell;
  FieldCell x0_cell;
  for (const FieldCell& c : field.cells) {
    if (c.id == x0) x0_cell = c;
    if (c.id == partner) second_cell = c;
  }
  const double spill_rate = m1 * second_cell.kernel.initial_deriv();
  const double threshold = rate_of_return(x0_cell).inverse(spill_rate);
  result.kind = ImprovementKind::MassConcentration;
  result.threshold = threshold;

  double min_budget = std::numeric_limits<double>::infinity();
  for (double t : grid) min_budget = std::min(min_budget, effort_at(s.effort, t));
  if (!(min_budget > threshold)) {
    result.improved = false;  // no improvement guaranteed below the threshold
    return result;
  }

  // theta = options.theta first; on verification failure probe weaker and
  // stronger concentrations alternately (the guarantee comes from the
  // strong-concentration limit, while weaker steps keep the distribution
  // closer to the analyst's).
  std::vector<double> thetas = {options.theta};
  double weak = options.theta, strong = options.theta;
  for (int i = 0; i < options.max_retries; ++i) {
    if (i % 2 == 0) {
      weak *= 0.5;
      thetas.push_back(weak);
    } else {
      strong = 0.5 * (1.0 + strong);
      thetas.push_back(strong);
    }
  }
  for (double theta : thetas) {
    Scenario improved = s;
    DiscreteTargetDistribution nd;
    for (const auto& [cell, mass] : dist->masses) nd.masses[cell] = mass * (1.0 - theta);
    nd.masses[x0] = m0 + theta * (1.0 - m0);
    improved.distribution = nd;
    PlanComparison cmp = verify_improvement(s, improved, grid, options);
    if (cmp.verdict == Dominance::StrictlyDominates && cmp.true_mean_delta > 0.0) {
      result.improved = true;
      result.parameter = theta;
      result.verification = std::move(cmp);
      result.scenario = std::move(improved);
      return result;
    }
  }
  throw PlannerError("mass concentration failed verification for every probed theta");
}

// ---------------------------------------------------------------------------
// Continuous improvements
// ---------------------------------------------------------------------------

namespace {

ImprovementResult improve_by_bump(const Scenario& s, const Field& field,
                                  const std::vector<double>& grid,
                                  const ImprovementOptions& options) {
  if (!(options.bump_factor > 1.0))
    throw std::invalid_argument("bump factor must exceed 1 (the distribution must change)");
  const double total = field.total_mass();

  // The improved scenario is an explicit grid, and explicit grids resolve
  // points by nearest centre rather than by the analytic family's bins. The
  // two rules can disagree about which cell holds x0 (a point on a bin edge
  // sits a hair closer to the neighbouring centre), so the bump must land on
  // the cell the *improved* field will read back; re-aim until they agree.
  auto build = [&](std::size_t target, double factor) {
    const double cell_mass = field.cells[target].weight * field.cells[target].area;
    const double scale = 1.0 / (total + (factor - 1.0) * cell_mass);
    if (factor * cell_mass * scale >= 1.0 - 1e-9)
      throw PlannerError("density bump degenerates: the bumped cell would absorb all mass");
    GridDensity nd;
    nd.dim = grid_dim(s.distribution);
    nd.cells.reserve(field.cells.size());
    for (std::size_t i = 0; i < field.cells.size(); ++i) {
      const FieldCell& c = field.cells[i];
      nd.cells.push_back({c.x, c.y, c.area, c.weight * scale * (i == target ? factor : 1.0)});
    }
    Scenario improved = s;
    improved.distribution = nd;  // analytic families become explicit grids; the area stays
    return improved;
  };

  std::size_t target = *field.true_index;
  double factor = options.bump_factor;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    Scenario improved = build(target, factor);
    {
      const Field f_new = materialize(improved, options.grid);
      if (!f_new.true_index)
        throw PlannerError("bumped grid no longer resolves the true location");
      if (*f_new.true_index != target) {  // re-aim; locate ignores densities
        target = *f_new.true_index;
        improved = build(target, factor);
      }
    }
    PlanComparison cmp = verify_improvement(s, improved, grid, options);
    if (cmp.verdict == Dominance::StrictlyDominates && cmp.true_mean_delta > 0.0) {
      ImprovementResult result;
      result.improved = true;
      result.kind = ImprovementKind::DensityBump;
      result.parameter = factor;
      result.verification = std::move(cmp);
      result.scenario = std::move(improved);
      return result;
    }
    // A larger bump funds x0 earlier (the failure mode is x0 entering the
    // plan after the first grid times); shrinking it could not.
    factor = 1.0 + 2.0 * (factor - 1.0);
  }
  throw PlannerError("density bump failed verification for every probed factor");
}

ImprovementResult improve_by_support_shrink(const Scenario& s, const std::vector<double>& grid,
                                            const ImprovementOptions& options) {
  const auto* u = std::get_if<Uniform1D>(&s.distribution);
  if (!u)
    throw std::invalid_argument("support shrink applies to the uniform 1-D family only");
  const double x0 = point_location(s).x;

  double b_new = 0.5 * u->b;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    if (!(b_new > x0)) {
      // Keep x0 strictly inside the shrunken support.
      b_new = 0.5 * (b_new + u->b);
      continue;
    }
    Scenario improved = s;
    improved.distribution = Uniform1D{u->a, b_new};
    improved.area = IntervalArea{u->a, b_new};
    improved.detection = clip_detection(s.detection, b_new);
    PlanComparison cmp = verify_improvement(s, improved, grid, options);
    if (cmp.verdict == Dominance::StrictlyDominates && cmp.true_mean_delta > 0.0) {
      ImprovementResult result;
      result.improved = true;
      result.kind = ImprovementKind::SupportShrink;
      result.parameter = b_new;
      result.verification = std::move(cmp);
      result.scenario = std::move(improved);
      return result;
    }
    b_new *= 0.5;
  }
  throw PlannerError("support shrink failed verification for every probed b");
}

ImprovementResult improve_by_sigma_shrink(const Scenario& s, const std::vector<double>& grid,
                                          const ImprovementOptions& options) {
  const auto* cn = std::get_if<CircularNormal>(&s.distribution);
  if (!cn)
    throw std::invalid_argument("sigma shrink applies to the circular-normal family only");

  double sigma_new = 0.5 * cn->sigma;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    Scenario improved = s;
    improved.distribution = CircularNormal{sigma_new};
    PlanComparison cmp = verify_improvement(s, improved, grid, options);
    if (cmp.verdict == Dominance::StrictlyDominates && cmp.true_mean_delta > 0.0) {
      ImprovementResult result;
      result.improved = true;
      result.kind = ImprovementKind::SigmaShrink;
      result.parameter = sigma_new;
      result.verification = std::move(cmp);
      result.scenario = std::move(improved);
      return result;
    }
    // A deeper shrink speeds up the region near the centre but weakens the
    // early-time coverage at x0's radius; back toward the original sigma.
    sigma_new = 0.5 * (sigma_new + cn->sigma);
  }
  throw PlannerError("sigma shrink failed verification for every probed sigma");
}

}  // namespace

ImprovementResult improve_continuous(const Scenario& s, ContinuousStrategy strategy,
                                     const ImprovementOptions& options) {
  require_valid_input(s);
  if (is_discrete(s.distribution))
    throw std::invalid_argument("improve_continuous needs a continuous distribution");
  if (!s.true_location) throw std::invalid_argument("scenario declares no true target location");
  const Field field = materialize(s, options.grid);
  if (!field.true_index)
    throw std::invalid_argument("true location lies outside the support; repair it first");
  const std::vector<double> grid = verification_grid(field, s.effort, options);

  switch (strategy) {
    case ContinuousStrategy::DensityBump:
      return improve_by_bump(s, field, grid, options);
    case ContinuousStrategy::SupportShrink:
      return improve_by_support_shrink(s, grid, options);
    case ContinuousStrategy::SigmaShrink:
      return improve_by_sigma_shrink(s, grid, options);
  }
  throw std::invalid_argument("unknown continuous improvement strategy");
}

WitnessLocation find_witness_location(const DiscreteTargetDistribution& d) {
  if (d.masses.empty()) throw std::invalid_argument("distribution has no cells");
  WitnessLocation w;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& [cell, mass] : d.masses) {
    if (mass < lo) {  // ties resolve to the lowest id via map order
      lo = mass;
      w.cell = cell;
    }
    hi = std::max(hi, mass);
  }
  w.threshold_dependent = (hi - lo) < 1e-15;
  return w;
}

}  // namespace searchplan
