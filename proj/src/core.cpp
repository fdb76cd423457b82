#include "searchplan/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace searchplan {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

bool is_discrete(const TargetDistribution& d) {
  return std::holds_alternative<DiscreteTargetDistribution>(d);
}

// ---------------------------------------------------------------------------
// Detection kernels
// ---------------------------------------------------------------------------

double DetectionKernel::detect(double y) const {
  if (y < 0.0) throw std::invalid_argument("detection effort must be non-negative");
  if (exponential) return -std::expm1(-alpha * y);
  return prob(y);
}

double DetectionKernel::detect_deriv(double y) const {
  if (y < 0.0) throw std::invalid_argument("detection effort must be non-negative");
  if (exponential) return alpha * std::exp(-alpha * y);
  return deriv(y);
}

double DetectionKernel::detect_deriv_inv(double r) const {
  if (r <= 0.0) throw std::invalid_argument("marginal rate must be positive");
  if (exponential) return std::log(alpha / r) / alpha;
  return deriv_inv(r);
}

double DetectionKernel::initial_deriv() const {
  return exponential ? alpha : deriv(0.0);
}

GenericRegular make_power_detection(double scale, double shape) {
  if (!(scale > 0.0) || !(shape > 0.0))
    throw std::invalid_argument("power detection needs scale > 0 and shape > 0");
  GenericRegular g;
  g.family = "power";
  g.params = {{"scale", scale}, {"shape", shape}};
  // d(y) = 1 - (1 + y/s)^-k, d'(y) = (k/s)(1 + y/s)^-(k+1)
  g.prob = [scale, shape](double y) { return 1.0 - std::pow(1.0 + y / scale, -shape); };
  g.deriv = [scale, shape](double y) {
    return (shape / scale) * std::pow(1.0 + y / scale, -(shape + 1.0));
  };
  g.deriv_inv = [scale, shape](double r) {
    return scale * (std::pow(shape / (scale * r), 1.0 / (shape + 1.0)) - 1.0);
  };
  return g;
}

// ---------------------------------------------------------------------------
// Effort schedules
// ---------------------------------------------------------------------------

double effort_at(const EffortSchedule& schedule, double t) {
  if (t < 0.0) throw std::invalid_argument("time must be non-negative");
  if (const auto* lin = std::get_if<LinearEffort>(&schedule))
    return lin->offset + lin->rate * t;
  const auto& knots = std::get<TableEffort>(schedule).knots;
  if (knots.empty()) throw std::invalid_argument("effort table has no knots");
  if (t <= knots.front().t) return knots.front().value;
  if (t >= knots.back().t) return knots.back().value;  // constant continuation
  auto hi = std::upper_bound(knots.begin(), knots.end(), t,
                             [](double v, const EffortKnot& k) { return v < k.t; });
  auto lo = hi - 1;
  const double w = (t - lo->t) / (hi->t - lo->t);
  return lo->value + w * (hi->value - lo->value);
}

// ---------------------------------------------------------------------------
// Location -> kernel resolution
// ---------------------------------------------------------------------------

namespace {

DetectionKernel exponential_kernel(double alpha) {
  DetectionKernel k;
  k.exponential = true;
  k.alpha = alpha;
  return k;
}

DetectionKernel generic_kernel(const GenericRegular& g) {
  DetectionKernel k;
  k.exponential = false;
  k.alpha = 0.0;
  k.prob = g.prob;
  k.deriv = g.deriv;
  k.deriv_inv = g.deriv_inv;
  return k;
}

double piecewise_rate_at(const ExpPiecewise1D& m, double x) {
  for (std::size_t i = 0; i < m.pieces.size(); ++i) {
    const RatePiece& p = m.pieces[i];
    const bool last = (i + 1 == m.pieces.size());
    if (x >= p.from && (x < p.to || (last && x <= p.to))) return p.alpha;
  }
  throw std::invalid_argument("location lies outside the piecewise detection pieces");
}

}  // namespace

DetectionKernel kernel_at(const DetectionModel& m, const TrueLocation& at) {
  if (const auto* homo = std::get_if<ExpHomogeneous>(&m)) return exponential_kernel(homo->alpha);
  if (const auto* per = std::get_if<ExpPerCell>(&m)) {
    const CellId* cell = std::get_if<CellId>(&at);
    if (!cell) throw std::invalid_argument("per-cell detection needs a cell location");
    auto it = per->rates.find(*cell);
    if (it == per->rates.end())
      throw std::invalid_argument("no detection rate for cell " + std::to_string(*cell));
    return exponential_kernel(it->second);
  }
  if (const auto* pw = std::get_if<ExpPiecewise1D>(&m)) {
    const PointLocation* pt = std::get_if<PointLocation>(&at);
    if (!pt || pt->dim != 1)
      throw std::invalid_argument("piecewise detection needs a 1-D point location");
    return exponential_kernel(piecewise_rate_at(*pw, pt->x));
  }
  return generic_kernel(std::get<GenericRegular>(m));
}

double detection_probability_of_effort(const DetectionModel& m, const TrueLocation& at,
                                       double y) {
  if (y < 0.0) throw std::invalid_argument("detection effort must be non-negative");
  return kernel_at(m, at).detect(y);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

void validate_distribution(const Scenario& s, ValidationReport& r) {
  if (const auto* d = std::get_if<DiscreteTargetDistribution>(&s.distribution)) {
    if (d->masses.empty()) r.violations.push_back("distribution: no cells");
    KahanSum total;
    for (const auto& [cell, mass] : d->masses) {
      if (cell <= 0)
        r.violations.push_back("distribution: cell ids must be positive, got " +
                               std::to_string(cell));
      if (!(mass > 0.0))
        r.violations.push_back("distribution: mass of cell " + std::to_string(cell) +
                               " must be strictly positive");
      if (mass >= 1.0 && d->masses.size() > 1)
        r.violations.push_back("distribution: mass of cell " + std::to_string(cell) +
                               " must be strictly below 1");
      total.add(mass);
    }
    if (!d->masses.empty() && std::abs(total.value() - 1.0) > kMassTolerance)
      r.violations.push_back("distribution: masses sum to " + fmt(total.value()) +
                             ", expected 1 within " + fmt(kMassTolerance));
  } else if (const auto* cn = std::get_if<CircularNormal>(&s.distribution)) {
    if (!(cn->sigma > 0.0)) r.violations.push_back("distribution: sigma must be positive");
  } else if (const auto* u = std::get_if<Uniform1D>(&s.distribution)) {
    if (!(u->a < u->b)) r.violations.push_back("distribution: uniform interval needs a < b");
  } else {
    const auto& g = std::get<GridDensity>(s.distribution);
    if (g.dim != 1 && g.dim != 2) r.violations.push_back("distribution: grid dim must be 1 or 2");
    if (g.cells.empty()) r.violations.push_back("distribution: grid has no cells");
    if (g.cells.size() > kMaxCells)
      r.violations.push_back("distribution: grid exceeds the cell cap of " +
                             std::to_string(kMaxCells));
    KahanSum total;
    for (std::size_t i = 0; i < g.cells.size(); ++i) {
      const GridCell& c = g.cells[i];
      if (!(c.area > 0.0))
        r.violations.push_back("distribution: grid cell " + std::to_string(i) +
                               " needs positive area");
      if (c.density < 0.0)
        r.violations.push_back("distribution: grid cell " + std::to_string(i) +
                               " has negative density");
      total.add(c.density * c.area);
    }
    if (!g.cells.empty() && std::abs(total.value() - 1.0) > kGridMassTolerance)
      r.violations.push_back("distribution: grid total probability is " + fmt(total.value()) +
                             ", expected 1 within " + fmt(kGridMassTolerance));
  }
}

// Numeric regularity probe for generic detection: d(0)=0, d within [0,1),
// increasing; derivative positive and strictly decreasing; inverse consistent
// with the derivative. Sampled on a mixed linear/geometric effort grid.
void probe_generic_regularity(const GenericRegular& g, ValidationReport& r) {
  if (!g.prob || !g.deriv || !g.deriv_inv) {
    r.violations.push_back("detection: generic model is missing a callable");
    return;
  }
  std::vector<double> ys = {0.0};
  for (int i = 0; i <= 24; ++i) ys.push_back(0.25 * i);
  for (double y : {1e-3, 1e-2, 1e-1, 1e1, 3e1, 1e2}) ys.push_back(y);
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

  if (std::abs(g.prob(0.0)) > 1e-12)
    r.violations.push_back("detection: d(0) must be 0, got " + fmt(g.prob(0.0)));

  double prev_p = -1.0, prev_d = std::numeric_limits<double>::infinity();
  for (double y : ys) {
    const double p = g.prob(y);
    const double d = g.deriv(y);
    if (!(p >= 0.0) || !(p <= 1.0)) {
      r.violations.push_back("detection: d(" + fmt(y) + ") = " + fmt(p) + " outside [0, 1]");
      return;
    }
    if (p < prev_p - 1e-12) {
      r.violations.push_back("detection: d decreases near y = " + fmt(y));
      return;
    }
    if (!(d > 0.0)) {
      r.violations.push_back("detection: derivative must stay positive, failed at y = " + fmt(y));
      return;
    }
    if (d >= prev_d) {
      r.violations.push_back("detection: derivative must be strictly decreasing, failed at y = " +
                             fmt(y));
      return;
    }
    prev_p = p;
    prev_d = d;
  }
  // Round-trip the inverse at a few interior rates.
  const double d0 = g.deriv(0.0);
  for (double frac : {0.9, 0.5, 0.1, 0.01}) {
    const double rate = frac * d0;
    const double y = g.deriv_inv(rate);
    if (!(y >= -1e-9)) {
      r.violations.push_back("detection: derivative inverse returned negative effort");
      return;
    }
    const double back = g.deriv(std::max(y, 0.0));
    if (std::abs(back - rate) > 1e-6 * rate) {
      r.violations.push_back("detection: derivative inverse inconsistent at rate " + fmt(rate));
      return;
    }
  }
}

void validate_detection(const Scenario& s, ValidationReport& r) {
  const bool discrete = is_discrete(s.distribution);
  if (const auto* homo = std::get_if<ExpHomogeneous>(&s.detection)) {
    if (!(homo->alpha > 0.0)) r.violations.push_back("detection: alpha must be positive");
  } else if (const auto* per = std::get_if<ExpPerCell>(&s.detection)) {
    if (!discrete) {
      r.violations.push_back("detection: per-cell rates require a discrete distribution");
      return;
    }
    const auto& masses = std::get<DiscreteTargetDistribution>(s.distribution).masses;
    for (const auto& [cell, rate] : per->rates)
      if (!(rate > 0.0))
        r.violations.push_back("detection: rate of cell " + std::to_string(cell) +
                               " must be positive");
    for (const auto& [cell, mass] : masses) {
      (void)mass;
      if (per->rates.find(cell) == per->rates.end())
        r.violations.push_back("detection: no rate given for cell " + std::to_string(cell));
    }
    for (const auto& [cell, rate] : per->rates) {
      (void)rate;
      if (masses.find(cell) == masses.end())
        r.violations.push_back("detection: rate given for unknown cell " + std::to_string(cell));
    }
  } else if (const auto* pw = std::get_if<ExpPiecewise1D>(&s.detection)) {
    const auto* interval = std::get_if<IntervalArea>(&s.area);
    const bool one_d = interval != nullptr ||
                       (std::holds_alternative<Uniform1D>(s.distribution));
    if (discrete || !one_d) {
      r.violations.push_back("detection: piecewise rates require a 1-D continuous area");
      return;
    }
    if (pw->pieces.empty()) {
      r.violations.push_back("detection: piecewise model has no pieces");
      return;
    }
    for (const RatePiece& p : pw->pieces) {
      if (!(p.alpha > 0.0)) r.violations.push_back("detection: piece rate must be positive");
      if (!(p.from < p.to)) r.violations.push_back("detection: piece needs from < to");
    }
    for (std::size_t i = 1; i < pw->pieces.size(); ++i)
      if (std::abs(pw->pieces[i].from - pw->pieces[i - 1].to) > 1e-12)
        r.violations.push_back("detection: pieces must tile the interval contiguously");
    if (interval) {
      if (std::abs(pw->pieces.front().from - interval->a) > 1e-12 ||
          std::abs(pw->pieces.back().to - interval->b) > 1e-12)
        r.violations.push_back("detection: pieces must cover the whole area interval");
    }
  } else {
    probe_generic_regularity(std::get<GenericRegular>(s.detection), r);
  }
}

void validate_effort(const Scenario& s, ValidationReport& r) {
  if (const auto* lin = std::get_if<LinearEffort>(&s.effort)) {
    if (lin->rate < 0.0) r.violations.push_back("effort: rate must be non-negative");
    if (lin->offset < 0.0) r.violations.push_back("effort: offset must be non-negative");
    if (!(lin->rate > 0.0 || lin->offset > 0.0))
      r.violations.push_back("effort: schedule is identically zero");
  } else {
    const auto& knots = std::get<TableEffort>(s.effort).knots;
    if (knots.empty()) {
      r.violations.push_back("effort: table has no knots");
      return;
    }
    if (knots.front().t != 0.0)
      r.violations.push_back("effort: first table knot must sit at t = 0");
    if (knots.front().value < 0.0) r.violations.push_back("effort: E(0) must be non-negative");
    for (std::size_t i = 1; i < knots.size(); ++i) {
      if (!(knots[i].t > knots[i - 1].t))
        r.violations.push_back("effort: knot times must be strictly increasing");
      if (knots[i].value < knots[i - 1].value)
        r.violations.push_back("effort: cumulative effort cannot decrease");
    }
    // E(t) > 0 for all t > 0: once past t=0 the schedule must have climbed.
    if (knots.size() >= 2 && knots.front().value == 0.0 &&
        knots[1].value == knots.front().value)
      r.violations.push_back("effort: E stays at 0 beyond t = 0");
    if (knots.size() == 1 && knots.front().value == 0.0)
      r.violations.push_back("effort: schedule is identically zero");
  }
}

void validate_area(const Scenario& s, ValidationReport& r) {
  if (const auto* cells = std::get_if<CellArea>(&s.area)) {
    const auto* d = std::get_if<DiscreteTargetDistribution>(&s.distribution);
    if (!d) {
      r.violations.push_back("area: cell area requires a discrete distribution");
      return;
    }
    std::set<CellId> area_cells(cells->cells.begin(), cells->cells.end());
    if (area_cells.size() != cells->cells.size())
      r.violations.push_back("area: duplicate cell ids");
    for (const auto& [cell, mass] : d->masses) {
      (void)mass;
      if (area_cells.find(cell) == area_cells.end())
        r.violations.push_back("area: distribution cell " + std::to_string(cell) +
                               " lies outside the area");
    }
    for (CellId cell : cells->cells)
      if (d->masses.find(cell) == d->masses.end())
        r.violations.push_back("area: cell " + std::to_string(cell) +
                               " carries no probability mass (support must match the area)");
  } else if (const auto* interval = std::get_if<IntervalArea>(&s.area)) {
    if (!(interval->a < interval->b)) r.violations.push_back("area: interval needs a < b");
    if (const auto* u = std::get_if<Uniform1D>(&s.distribution)) {
      if (std::abs(u->a - interval->a) > 1e-12 || std::abs(u->b - interval->b) > 1e-12)
        r.violations.push_back("area: uniform support must match the area interval");
    } else if (const auto* g = std::get_if<GridDensity>(&s.distribution)) {
      if (g->dim != 1) r.violations.push_back("area: interval area requires a 1-D grid");
    } else {
      r.violations.push_back("area: interval area requires a 1-D distribution");
    }
  } else if (std::holds_alternative<PlaneArea>(s.area)) {
    const bool ok = std::holds_alternative<CircularNormal>(s.distribution) ||
                    (std::holds_alternative<GridDensity>(s.distribution) &&
                     std::get<GridDensity>(s.distribution).dim == 2);
    if (!ok) r.violations.push_back("area: plane area requires a planar density");
  } else {
    if (!std::holds_alternative<GridDensity>(s.distribution))
      r.violations.push_back("area: implicit grid area requires a grid distribution");
  }
}

void validate_true_location(const Scenario& s, ValidationReport& r) {
  if (!s.true_location) return;
  const bool discrete = is_discrete(s.distribution);
  if (const auto* cell = std::get_if<CellId>(&*s.true_location)) {
    if (!discrete)
      r.violations.push_back("true_location: cell id given for a continuous area");
    else if (*cell <= 0)
      r.violations.push_back("true_location: cell ids must be positive");
    // A cell outside the support is allowed: that is the misspecified case.
  } else {
    const auto& pt = std::get<PointLocation>(*s.true_location);
    if (discrete) {
      r.violations.push_back("true_location: point given for a discrete area");
      return;
    }
    const int want_dim = std::holds_alternative<CircularNormal>(s.distribution) ||
                                 (std::holds_alternative<GridDensity>(s.distribution) &&
                                  std::get<GridDensity>(s.distribution).dim == 2)
                             ? 2
                             : 1;
    if (pt.dim != want_dim)
      r.violations.push_back("true_location: point dimension does not match the area");
  }
}

}  // namespace

ValidationReport validate_scenario(const Scenario& s) {
  ValidationReport r;
  validate_distribution(s, r);
  validate_detection(s, r);
  validate_effort(s, r);
  validate_area(s, r);
  validate_true_location(s, r);
  if (r.valid()) {
    // Existence preconditions for a uniformly optimal plan: regular detection
    // (validated above) over a finite cell set, or an integrable density on a
    // sigma-finite area. Every representable scenario that validates meets
    // them; the note records the branch that applies.
    r.notes.push_back(is_discrete(s.distribution)
                          ? "existence preconditions hold: finite cell set, regular detection"
                          : "existence preconditions hold: integrable density, regular detection");
  }
  return r;
}

std::vector<double> geometric_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2)
    throw std::invalid_argument("geometric grid needs 0 < lo < hi and n >= 2");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double ratio = std::log(hi / lo) / (n - 1);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo * std::exp(ratio * i);
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace searchplan
