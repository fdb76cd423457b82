#include "searchplan/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace searchplan {

namespace {

constexpr std::size_t kMaxBruteCells = 6;
constexpr double kMaxLatticePoints = 3e7;  // 4 cells at 500 quanta is ~2.1e7

double compositions(std::int64_t quanta, std::size_t cells) {
  // C(quanta + cells - 1, cells - 1), evaluated in doubles for the size guard.
  double c = 1.0;
  for (std::size_t i = 1; i < cells; ++i)
    c *= static_cast<double>(quanta + static_cast<std::int64_t>(i)) / static_cast<double>(i);
  return c;
}

// 53-bit uniform in [0, 1). Hand-rolled so the stream is identical on every
// platform (std::uniform_real_distribution is not).
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

BruteForceResult brute_force_best_allocation(const Field& f, double budget, double step) {
  if (!f.discrete) throw std::invalid_argument("brute force handles discrete fields only");
  const std::size_t n = f.cells.size();
  if (n == 0 || n > kMaxBruteCells)
    throw std::invalid_argument("brute force handles 1..6 cells");
  if (!(step > 0.0) || !(budget >= 0.0))
    throw std::invalid_argument("brute force needs step > 0 and budget >= 0");
  const std::int64_t quanta = std::llround(budget / step);
  if (std::abs(budget - static_cast<double>(quanta) * step) > 1e-9 * std::max(1.0, budget))
    throw std::invalid_argument("budget must be an integer multiple of the step");
  if (compositions(quanta, n) > kMaxLatticePoints)
    throw std::invalid_argument("lattice too large; raise the step");

  // Detection tables d_i(k * step), k = 0..quanta.
  std::vector<std::vector<double>> table(n);
  for (std::size_t i = 0; i < n; ++i) {
    table[i].resize(static_cast<std::size_t>(quanta) + 1);
    for (std::int64_t k = 0; k <= quanta; ++k)
      table[i][static_cast<std::size_t>(k)] =
          f.cells[i].weight * f.cells[i].kernel.detect(static_cast<double>(k) * step);
  }

  std::vector<std::int64_t> counts(n, 0);
  std::vector<std::int64_t> best(n, 0);
  double best_p = -1.0;
  // Enumerate every composition of `quanta` into n parts; the last cell
  // absorbs whatever the earlier ones left. First maximum wins ties, which
  // favours effort on low-index cells.
  const std::function<void(std::size_t, std::int64_t, double)> enumerate =
      [&](std::size_t i, std::int64_t left, double acc) {
        if (i + 1 == n) {
          counts[i] = left;
          const double p = acc + table[i][static_cast<std::size_t>(left)];
          if (p > best_p) {
            best_p = p;
            best = counts;
          }
          return;
        }
        for (std::int64_t k = 0; k <= left; ++k) {
          counts[i] = k;
          enumerate(i + 1, left - k, acc + table[i][static_cast<std::size_t>(k)]);
        }
      };
  enumerate(0, quanta, 0.0);

  BruteForceResult result;
  result.probability = best_p;
  result.allocation.effort.resize(n);
  double spent = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    result.allocation.effort[i] = static_cast<double>(best[i]) * step;
    spent += result.allocation.effort[i] * f.cells[i].area;
  }
  result.allocation.budget = spent;
  return result;
}

Allocation greedy_incremental_allocation(const Field& f, double budget, double increment) {
  const std::size_t n = f.cells.size();
  if (n == 0) throw std::invalid_argument("empty field");
  if (!(increment > 0.0) || !(budget >= 0.0))
    throw std::invalid_argument("greedy needs increment > 0 and budget >= 0");

  Allocation a;
  a.effort.assign(n, 0.0);
  const std::int64_t steps = static_cast<std::int64_t>(budget / increment);
  const double remainder = budget - static_cast<double>(steps) * increment;

  auto give = [&](double amount) {
    // Pick the cell whose detection probability rises most when `amount` of
    // effort (density amount/area) lands on it.
    std::size_t best = 0;
    double best_gain = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const FieldCell& c = f.cells[i];
      const double y0 = a.effort[i];
      const double y1 = y0 + amount / c.area;
      const double gain = c.weight * c.area * (c.kernel.detect(y1) - c.kernel.detect(y0));
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    a.effort[best] += amount / f.cells[best].area;
  };

  for (std::int64_t s = 0; s < steps; ++s) give(increment);
  if (remainder > 0.0) give(remainder);
  a.budget = budget;
  return a;
}

MonteCarloResult monte_carlo_detection(const Field& f, const Allocation& a, int trials,
                                       std::uint64_t seed, bool use_true_location) {
  if (trials <= 0) throw std::invalid_argument("trials must be positive");
  if (a.effort.size() != f.cells.size())
    throw std::invalid_argument("allocation does not match the field");
  if (use_true_location && !f.true_index)
    throw std::invalid_argument("field has no located true cell");

  // Inverse-CDF table over cell masses for the subjective mode.
  std::vector<double> cdf;
  double total = 0.0;
  if (!use_true_location) {
    cdf.resize(f.cells.size());
    for (std::size_t i = 0; i < f.cells.size(); ++i) {
      total += f.cells[i].weight * f.cells[i].area;
      cdf[i] = total;
    }
  }

  std::mt19937_64 rng(seed);
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    std::size_t cell;
    if (use_true_location) {
      cell = *f.true_index;
    } else {
      const double u = uniform01(rng) * total;
      cell = static_cast<std::size_t>(
          std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      if (cell >= f.cells.size()) cell = f.cells.size() - 1;
    }
    const double p = f.cells[cell].kernel.detect(a.effort[cell]);
    if (uniform01(rng) < p) ++hits;
  }

  MonteCarloResult r;
  r.trials = trials;
  r.seed = seed;
  r.estimate = static_cast<double>(hits) / trials;
  r.std_error = std::sqrt(std::max(0.0, r.estimate * (1.0 - r.estimate)) / trials);
  return r;
}

}  // namespace searchplan
