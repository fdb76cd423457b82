#include "searchplan/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace searchplan {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string short_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Half-open bin lookup on [lo, hi) split into n equal parts. Bin edges are
// computed as lo + (hi-lo)*i/n so that "nice" boundaries (e.g. 0 inside
// (-1,1) with an even n) land exactly; the floor estimate is then nudged
// against those exact edges to cancel floating-point drift.
std::optional<std::size_t> equal_bin(double v, double lo, double hi, int n) {
  if (!(v >= lo) || !(v < hi)) return std::nullopt;
  const auto edge = [&](int k) { return lo + (hi - lo) * (static_cast<double>(k) / n); };
  int i = static_cast<int>(std::floor((v - lo) / (hi - lo) * n));
  i = std::clamp(i, 0, n - 1);
  while (i + 1 < n && v >= edge(i + 1)) ++i;
  while (i > 0 && v < edge(i)) --i;
  return static_cast<std::size_t>(i);
}

DetectionKernel kernel_for_point(const DetectionModel& m, double x, double y, int dim) {
  PointLocation pt;
  pt.x = x;
  pt.y = y;
  pt.dim = dim;
  return kernel_at(m, pt);
}

Field materialize_discrete(const Scenario& s) {
  const auto& masses = std::get<DiscreteTargetDistribution>(s.distribution).masses;
  Field f;
  f.discrete = true;
  f.cells.reserve(masses.size());
  for (const auto& [cell, mass] : masses) {
    FieldCell c;
    c.label = std::to_string(cell);
    c.id = cell;
    c.weight = mass;
    c.area = 1.0;
    c.kernel = kernel_at(s.detection, TrueLocation{cell});
    f.all_exponential = f.all_exponential && c.kernel.exponential;
    f.cells.push_back(std::move(c));
  }
  if (s.true_location) {
    f.has_true_location = true;
    const CellId want = std::get<CellId>(*s.true_location);
    for (std::size_t i = 0; i < f.cells.size(); ++i)
      if (f.cells[i].id == want) f.true_index = i;
  }
  return f;
}

Field materialize_polar(const Scenario& s, const CircularNormal& cn, const GridOptions& opt) {
  const double sigma = cn.sigma;
  const int nr = opt.polar_radial_per_sigma * static_cast<int>(opt.polar_truncation_sigmas);
  const int nth = opt.polar_angular;
  if (nr <= 0 || nth <= 0)
    throw std::invalid_argument("polar grid needs positive radial and angular resolution");
  const double r_max = opt.polar_truncation_sigmas * sigma;
  const double outside = std::exp(-0.5 * (r_max / sigma) * (r_max / sigma));
  if (outside >= kTruncationTolerance)
    throw std::invalid_argument("polar truncation leaves too much probability outside the grid");
  const std::size_t total = static_cast<std::size_t>(nr) * static_cast<std::size_t>(nth);
  if (total > kMaxCells)
    throw std::invalid_argument("polar grid exceeds the cell cap");

  const double dr = r_max / nr;
  const double dth = kTwoPi / nth;
  const double norm = 1.0 / (kTwoPi * sigma * sigma);

  Field f;
  f.discrete = false;
  f.cells.reserve(total);
  for (int i = 0; i < nr; ++i) {
    const double rc = (i + 0.5) * dr;
    const double weight = norm * std::exp(-0.5 * (rc / sigma) * (rc / sigma));
    const double area = rc * dr * dth;  // exact annular-sector area
    for (int j = 0; j < nth; ++j) {
      const double thc = (j + 0.5) * dth;
      FieldCell c;
      c.label = "r=" + short_num(rc) + ",th=" + short_num(thc);
      c.weight = weight;
      c.area = area;
      c.x = rc * std::cos(thc);
      c.y = rc * std::sin(thc);
      c.kernel = kernel_for_point(s.detection, c.x, c.y, 2);
      f.all_exponential = f.all_exponential && c.kernel.exponential;
      f.cells.push_back(std::move(c));
    }
  }

  f.locate = [r_max, nr, nth](const PointLocation& pt) -> std::optional<std::size_t> {
    const double r = std::hypot(pt.x, pt.y);
    double th = std::atan2(pt.y, pt.x);
    if (th < 0.0) th += kTwoPi;
    if (th >= kTwoPi) th = 0.0;
    const auto ri = equal_bin(r, 0.0, r_max, nr);
    if (!ri) return std::nullopt;
    const auto ti = equal_bin(th, 0.0, kTwoPi, nth);
    if (!ti) return std::nullopt;
    return *ri * static_cast<std::size_t>(nth) + *ti;
  };

  if (s.true_location) {
    f.has_true_location = true;
    f.true_index = f.locate(std::get<PointLocation>(*s.true_location));
  }
  return f;
}

Field materialize_interval(const Scenario& s, const Uniform1D& u, const GridOptions& opt) {
  const int n = opt.line_cells;
  if (n <= 0) throw std::invalid_argument("interval grid needs a positive cell count");
  if (static_cast<std::size_t>(n) > kMaxCells)
    throw std::invalid_argument("interval grid exceeds the cell cap");
  const double a = u.a, b = u.b;
  const double width = (b - a) / n;
  const double density = 1.0 / (b - a);

  Field f;
  f.discrete = false;
  f.cells.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double xc = a + (b - a) * ((i + 0.5) / n);
    FieldCell c;
    c.label = "x=" + short_num(xc);
    c.weight = density;
    c.area = width;
    c.x = xc;
    c.kernel = kernel_for_point(s.detection, xc, 0.0, 1);
    f.all_exponential = f.all_exponential && c.kernel.exponential;
    f.cells.push_back(std::move(c));
  }

  f.locate = [a, b, n](const PointLocation& pt) { return equal_bin(pt.x, a, b, n); };

  if (s.true_location) {
    f.has_true_location = true;
    f.true_index = f.locate(std::get<PointLocation>(*s.true_location));
  }
  return f;
}

Field materialize_grid(const Scenario& s, const GridDensity& g) {
  if (g.cells.size() > kMaxCells)
    throw std::invalid_argument("grid distribution exceeds the cell cap");
  Field f;
  f.discrete = false;
  f.cells.reserve(g.cells.size());
  for (const GridCell& gc : g.cells) {
    FieldCell c;
    c.label = g.dim == 2 ? ("x=" + short_num(gc.x) + ",y=" + short_num(gc.y))
                         : ("x=" + short_num(gc.x));
    c.weight = gc.density;
    c.area = gc.area;
    c.x = gc.x;
    c.y = gc.y;
    c.kernel = kernel_for_point(s.detection, gc.x, gc.y, g.dim);
    f.all_exponential = f.all_exponential && c.kernel.exponential;
    f.cells.push_back(std::move(c));
  }

  // Explicit grids have no implied tiling; points map to the nearest centre
  // (ties to the lower index) but only within that cell's own extent --
  // half-width in 1-D, sqrt(area) in 2-D -- so that far-away points read as
  // misspecified instead of snapping to the boundary. Strongly anisotropic
  // 2-D cells can under-cover their corners; the slack factor absorbs
  // round-off, not geometry.
  struct Centre {
    double x, y, reach2;
  };
  std::vector<Centre> centres;
  centres.reserve(g.cells.size());
  for (const GridCell& gc : g.cells) {
    const double reach =
        g.dim == 2 ? std::sqrt(gc.area) * (1.0 + 1e-6) : 0.5 * gc.area * (1.0 + 1e-6);
    centres.push_back({gc.x, gc.y, reach * reach});
  }
  const int dim = g.dim;
  f.locate = [centres, dim](const PointLocation& pt) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < centres.size(); ++i) {
      const double dx = pt.x - centres[i].x;
      const double dy = dim == 2 ? pt.y - centres[i].y : 0.0;
      const double d = dx * dx + dy * dy;
      if (d < best_d && d <= centres[i].reach2) {
        best_d = d;
        best = i;
      }
    }
    return best;
  };

  if (s.true_location) {
    f.has_true_location = true;
    f.true_index = f.locate(std::get<PointLocation>(*s.true_location));
  }
  return f;
}

}  // namespace

double Field::total_mass() const {
  KahanSum total;
  for (const FieldCell& c : cells) total.add(c.weight * c.area);
  return total.value();
}

Field materialize(const Scenario& s, const GridOptions& options) {
  if (const auto* cn = std::get_if<CircularNormal>(&s.distribution))
    return materialize_polar(s, *cn, options);
  if (const auto* u = std::get_if<Uniform1D>(&s.distribution))
    return materialize_interval(s, *u, options);
  if (const auto* g = std::get_if<GridDensity>(&s.distribution)) return materialize_grid(s, *g);
  return materialize_discrete(s);
}

}  // namespace searchplan
