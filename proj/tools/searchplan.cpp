// searchplan — command-line front door for the search-planning library.
//
// Subcommands: validate, plan, eval, improve, verify, sweep. Every command
// loads a scenario file, validates it, runs, and writes CSV/JSON outputs via
// a temp-file + rename so that nonzero exits never leave partial files.
//
// Exit codes: 0 success, 1 validation violations, 2 unreadable or
// unparseable scenario, 3 planner/internal error, 4 missing true location,
// 5 no improvement guaranteed, 6 oracle size limit, 7 inapplicable sweep
// parameter.

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "searchplan/core.hpp"
#include "searchplan/evaluation.hpp"
#include "searchplan/field.hpp"
#include "searchplan/improvement.hpp"
#include "searchplan/oracle.hpp"
#include "searchplan/planner.hpp"
#include "searchplan/scenario_io.hpp"

namespace {

using nlohmann::json;
using namespace searchplan;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitUnreadable = 2;
constexpr int kExitPlanner = 3;
constexpr int kExitNoTrueLocation = 4;
constexpr int kExitNoImprovement = 5;
constexpr int kExitOracleLimit = 6;
constexpr int kExitInapplicable = 7;

// --------------------------------------------------------------------------
// Formatting and file plumbing
// --------------------------------------------------------------------------

// 9 significant digits, '.' separator, locale-independent.
std::string fmt9(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

// Writes content to path atomically (temp file + rename).
void write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << content;
    if (!out) throw std::runtime_error("failed writing " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
  }
}

// FNV-1a over the scenario file bytes; ties outputs to their exact input.
std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioParseError("cannot open " + path);
  std::uint64_t h = 1469598103934665603ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct ManifestClock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

json grid_config(const GridOptions& g) {
  return {{"polar_radial_per_sigma", g.polar_radial_per_sigma},
          {"polar_angular", g.polar_angular},
          {"polar_truncation_sigmas", g.polar_truncation_sigmas},
          {"line_cells", g.line_cells}};
}

json tolerance_config() {
  return {{"mass", kMassTolerance},
          {"grid_mass", kGridMassTolerance},
          {"budget_discrete", kBudgetTolDiscrete},
          {"budget_continuous", kBudgetTolContinuous},
          {"aggregate", kAggregateTol},
          {"level_rate", kLevelRateTol},
          {"monotone", kMonotoneTol},
          {"dominance", kDominanceTol}};
}

// Every run leaves a manifest: <out>.manifest.json when the command writes an
// output file, stdout otherwise.
void emit_manifest(const std::string& command, const std::string& scenario_path,
                   const json& config, const std::vector<std::string>& outputs,
                   const ManifestClock& clock) {
  json m;
  m["command"] = command;
  m["scenario"] = scenario_path;
  m["scenario_hash"] = file_hash(scenario_path);
  m["config"] = config;
  m["outputs"] = outputs;
  m["duration_ms"] = clock.elapsed_ms();
  if (outputs.empty()) {
    std::cout << "manifest: " << m.dump() << "\n";
  } else {
    write_file(outputs.front() + ".manifest.json", m.dump(2) + "\n");
  }
}

std::vector<double> default_times() { return geometric_grid(1e-3, 1e3, 64); }

void require_times(std::vector<double>& times) {
  if (times.empty()) {
    times = default_times();
    return;
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0)) throw CLI::ValidationError("--times must be non-negative");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw CLI::ValidationError("--times must be strictly increasing");
  }
}

// Loads and validates, or exits. Violations print one per line.
Scenario load_checked(const std::string& path, bool print_notes = false) {
  Scenario s = load_scenario(path);  // ScenarioParseError handled by main
  const ValidationReport report = validate_scenario(s);
  for (const std::string& n : report.notes)
    if (print_notes) std::cout << "note: " << n << "\n";
  if (!report.valid()) {
    for (const std::string& v : report.violations) std::cerr << v << "\n";
    std::exit(kExitInvalid);
  }
  return s;
}

// --------------------------------------------------------------------------
// Subcommand bodies
// --------------------------------------------------------------------------

int cmd_validate(const std::string& path) {
  const ManifestClock clock;
  Scenario s = load_scenario(path);
  const ValidationReport report = validate_scenario(s);
  for (const std::string& v : report.violations) std::cout << v << "\n";
  for (const std::string& n : report.notes) std::cout << "note: " << n << "\n";
  std::cout << (report.valid() ? "valid" : "invalid") << "\n";
  emit_manifest("validate", path, json::object(), {}, clock);
  return report.valid() ? kExitOk : kExitInvalid;
}

int cmd_plan(const std::string& path, std::vector<double> times, const std::string& out) {
  const ManifestClock clock;
  const Scenario s = load_checked(path);
  require_times(times);
  const GridOptions grid_options;
  const Field field = materialize(s, grid_options);
  const SearchPlan plan = build_plan(field, s.effort, times);

  std::ostringstream csv;
  csv << "t,budget,location,effort\n";
  for (std::size_t k = 0; k < plan.times.size(); ++k) {
    const Allocation& a = plan.allocations[k];
    for (std::size_t i = 0; i < field.cells.size(); ++i)
      csv << fmt9(plan.times[k]) << ',' << fmt9(a.budget) << ',' << field.cells[i].label << ','
          << fmt9(a.effort[i]) << '\n';
  }
  write_file(out, csv.str());
  emit_manifest("plan", path,
                {{"times", times},
                 {"grid", grid_config(grid_options)},
                 {"tolerances", tolerance_config()}},
                {out}, clock);
  return kExitOk;
}

int cmd_eval(const std::string& path, std::vector<double> times, const std::string& out,
             bool subjective_only) {
  const ManifestClock clock;
  const Scenario s = load_checked(path);
  require_times(times);
  if (!subjective_only && !s.true_location) {
    std::cerr << "scenario has no true location; pass --subjective-only for P alone\n";
    return kExitNoTrueLocation;
  }
  const GridOptions grid_options;
  const Field field = materialize(s, grid_options);
  const EvaluationReport report = evaluate(field, s.effort, times);
  const bool with_true = !subjective_only && report.has_true;

  std::ostringstream csv;
  csv << "t,budget,P_subjective,P_true,mu_subjective_cum,mu_true_cum\n";
  for (std::size_t k = 0; k < report.times.size(); ++k) {
    csv << fmt9(report.times[k]) << ',' << fmt9(report.budgets[k]) << ','
        << fmt9(report.subjective[k]) << ',';
    if (with_true) csv << fmt9(report.true_prob[k]);
    csv << ',' << fmt9(report.subjective_mean_cum[k]) << ',';
    if (with_true) csv << fmt9(report.true_mean_cum[k]);
    csv << '\n';
  }
  write_file(out, csv.str());

  auto describe = [](const MeanTimeResult& r) {
    if (r.diverged) return "diverged (horizon " + fmt9(r.horizon) + ")";
    return fmt9(r.value) + " (tail " + fmt9(r.tail_estimate) + " at horizon " + fmt9(r.horizon) +
           ")";
  };
  std::cout << "mu_subjective: " << describe(report.subjective_mean) << "\n";
  json mean_true_json;
  if (with_true) {
    std::cout << "mu_true: " << describe(report.true_mean) << "\n";
    mean_true_json = {{"diverged", report.true_mean.diverged},
                      {"value", report.true_mean.value},
                      {"tail", report.true_mean.tail_estimate},
                      {"horizon", report.true_mean.horizon}};
  }
  emit_manifest("eval", path,
                {{"times", times},
                 {"grid", grid_config(grid_options)},
                 {"tolerances", tolerance_config()},
                 {"subjective_only", subjective_only},
                 {"mu_subjective",
                  {{"diverged", report.subjective_mean.diverged},
                   {"value", report.subjective_mean.value},
                   {"tail", report.subjective_mean.tail_estimate},
                   {"horizon", report.subjective_mean.horizon}}},
                 {"mu_true", mean_true_json}},
                {out}, clock);
  return kExitOk;
}

int cmd_improve(const std::string& path, const std::string& out, const std::string& strategy,
                double epsilon, double theta, double factor) {
  const ManifestClock clock;
  const Scenario s = load_checked(path);
  if (!s.true_location) {
    std::cerr << "improvement needs a declared true location\n";
    return kExitNoTrueLocation;
  }
  ImprovementOptions options;
  options.epsilon = epsilon;
  options.theta = theta;
  options.bump_factor = factor;

  const Field field = materialize(s, options.grid);
  ImprovementResult result;
  if (!field.true_index) {
    result = repair_misspecified(s, options);
  } else if (field.discrete) {
    result = improve_discrete(s, options);
  } else {
    ContinuousStrategy cs;
    if (strategy == "bump") {
      cs = ContinuousStrategy::DensityBump;
    } else if (strategy == "shrink-support") {
      cs = ContinuousStrategy::SupportShrink;
    } else if (strategy == "shrink-sigma") {
      cs = ContinuousStrategy::SigmaShrink;
    } else {  // auto: family default
      if (std::holds_alternative<CircularNormal>(s.distribution))
        cs = ContinuousStrategy::SigmaShrink;
      else if (std::holds_alternative<Uniform1D>(s.distribution))
        cs = ContinuousStrategy::SupportShrink;
      else
        cs = ContinuousStrategy::DensityBump;
    }
    result = improve_continuous(s, cs, options);
  }

  if (!result.improved) {
    std::cout << "no improvement guaranteed: every grid budget sits at or below the "
                 "concentration threshold\n";
    if (result.threshold) std::cout << "threshold: " << fmt9(*result.threshold) << "\n";
    emit_manifest("improve", path,
                  {{"strategy", strategy}, {"epsilon", epsilon}, {"theta", theta},
                   {"factor", factor}, {"grid", grid_config(options.grid)},
                   {"tolerances", tolerance_config()}},
                  {}, clock);
    return kExitNoImprovement;
  }

  const PlanComparison& cmp = result.verification;
  std::cout << "construction: " << to_string(result.kind) << "\n";
  if (result.parameter) std::cout << "parameter: " << fmt9(*result.parameter) << "\n";
  if (result.threshold) std::cout << "threshold: " << fmt9(*result.threshold) << "\n";
  std::cout << "verdict: " << to_string(cmp.verdict) << "\n";
  std::cout << "delta_mu_true: " << fmt9(cmp.true_mean_delta) << "\n";
  std::cout << "t,P_true_improved,P_true_original\n";
  for (std::size_t k = 0; k < cmp.times.size(); ++k)
    std::cout << fmt9(cmp.times[k]) << ',' << fmt9(cmp.p_first[k]) << ','
              << fmt9(cmp.p_second[k]) << "\n";

  std::vector<std::string> outputs;
  if (!out.empty()) {
    json report;
    report["construction"] = to_string(result.kind);
    if (result.parameter) report["parameter"] = *result.parameter;
    if (result.threshold) report["threshold"] = *result.threshold;
    report["verdict"] = to_string(cmp.verdict);
    report["delta_mu_true"] = cmp.true_mean_delta;
    json table = json::array();
    for (std::size_t k = 0; k < cmp.times.size(); ++k)
      table.push_back({cmp.times[k], cmp.p_first[k], cmp.p_second[k]});
    report["table"] = table;
    report["scenario"] = scenario_to_json(result.scenario);
    write_file(out, report.dump(2) + "\n");
    outputs.push_back(out);
  }
  emit_manifest("improve", path,
                {{"strategy", strategy},
                 {"epsilon", epsilon},
                 {"theta", theta},
                 {"factor", factor},
                 {"grid", grid_config(options.grid)},
                 {"tolerances", tolerance_config()}},
                outputs, clock);
  return kExitOk;
}

int cmd_verify(const std::string& path, double budget, double step, std::uint64_t seed,
               int trials, const std::string& out) {
  const ManifestClock clock;
  const Scenario s = load_checked(path);
  const GridOptions grid_options;
  const Field field = materialize(s, grid_options);

  BruteForceResult brute;
  Allocation greedy;
  try {
    brute = brute_force_best_allocation(field, budget, step);
    greedy = greedy_incremental_allocation(field, budget, step);
  } catch (const std::invalid_argument& e) {
    std::cerr << "oracle limit: " << e.what() << "\n";
    return kExitOracleLimit;
  }

  const Allocation planned = allocation_for_budget(field, budget);
  const double planner_p = subjective_probability(field, planned);
  const double brute_p = subjective_probability(field, brute.allocation);
  const double greedy_p = subjective_probability(field, greedy);

  // The lattice/greedy optima are restricted classes: the planner may beat
  // them but must never fall behind beyond numerical noise.
  const double slack_brute = planner_p - brute_p;
  const double slack_greedy = planner_p - greedy_p;
  bool ok = slack_brute >= -1e-9 && slack_greedy >= -1e-9;

  std::vector<std::string> violations;
  {
    SearchPlan single;
    single.times = {1.0};
    single.allocations = {planned};
    // plan invariants re-checked against a schedule that pins E(1) = budget
    violations = check_plan_invariants(field, single, LinearEffort{budget, 0.0});
    for (const std::string& v : violations) std::cerr << "invariant: " << v << "\n";
    if (!violations.empty()) ok = false;
  }

  MonteCarloResult mc;
  bool have_mc = trials > 0 && field.true_index.has_value();
  if (have_mc) {
    mc = monte_carlo_detection(field, planned, trials, seed, true);
    const CurveEvaluator eval(field, LinearEffort{budget, 0.0});
    const double exact = eval.true_prob(1.0);
    if (std::abs(mc.estimate - exact) > 5.0 * mc.std_error + 1e-9) {
      std::cerr << "invariant: Monte Carlo estimate " << fmt9(mc.estimate)
                << " is more than 5 standard errors from " << fmt9(exact) << "\n";
      ok = false;
    }
  }

  std::ostringstream csv;
  csv << "scenario_hash,budget,planner_value,brute_force_value,greedy_value,slack_brute,"
         "slack_greedy,mc_estimate,mc_std_error,seed\n";
  csv << file_hash(path) << ',' << fmt9(budget) << ',' << fmt9(planner_p) << ','
      << fmt9(brute_p) << ',' << fmt9(greedy_p) << ',' << fmt9(slack_brute) << ','
      << fmt9(slack_greedy) << ',';
  if (have_mc) csv << fmt9(mc.estimate) << ',' << fmt9(mc.std_error);
  else csv << ',';
  csv << ',' << seed << '\n';
  const std::string body = csv.str();
  std::vector<std::string> outputs;
  if (!out.empty() && ok) {
    write_file(out, body);
    outputs.push_back(out);
  }
  std::cout << body;
  emit_manifest("verify", path,
                {{"budget", budget},
                 {"step", step},
                 {"seed", seed},
                 {"trials", trials},
                 {"grid", grid_config(grid_options)},
                 {"tolerances", tolerance_config()}},
                outputs, clock);
  return ok ? kExitOk : kExitPlanner;
}

int cmd_sweep(const std::string& path, const std::string& param, std::vector<double> values,
              std::vector<double> times, const std::string& out) {
  const ManifestClock clock;
  const Scenario base = load_checked(path);
  require_times(times);
  if (values.empty()) throw CLI::ValidationError("--values must not be empty");
  if (!base.true_location) {
    std::cerr << "sweep reports P_true; the scenario needs a true location\n";
    return kExitNoTrueLocation;
  }

  // Applicability: p rewrites a two-cell discrete split, sigma the
  // circular-normal spread, b the uniform right endpoint.
  const bool applicable =
      (param == "p" && std::holds_alternative<DiscreteTargetDistribution>(base.distribution) &&
       std::get<DiscreteTargetDistribution>(base.distribution).masses.size() == 2 &&
       std::holds_alternative<CellId>(*base.true_location)) ||
      (param == "sigma" && std::holds_alternative<CircularNormal>(base.distribution)) ||
      (param == "b" && std::holds_alternative<Uniform1D>(base.distribution));
  if (!applicable) {
    std::cerr << "parameter \"" << param << "\" does not apply to this scenario family\n";
    return kExitInapplicable;
  }

  auto rewrite = [&](double v) -> Scenario {
    Scenario s = base;
    if (param == "p") {
      const CellId x0 = std::get<CellId>(*base.true_location);
      DiscreteTargetDistribution nd;
      for (const auto& [cell, mass] :
           std::get<DiscreteTargetDistribution>(base.distribution).masses)
        nd.masses[cell] = (cell == x0) ? v : 1.0 - v;
      s.distribution = nd;
    } else if (param == "sigma") {
      s.distribution = CircularNormal{v};
    } else {
      const auto& u = std::get<Uniform1D>(base.distribution);
      s.distribution = Uniform1D{u.a, v};
      s.area = IntervalArea{u.a, v};
    }
    return s;
  };

  std::ostringstream csv;
  csv << param << ",t,P_true,mu_true\n";
  const GridOptions grid_options;
  for (double v : values) {
    const Scenario s = rewrite(v);
    const ValidationReport report = validate_scenario(s);
    if (!report.valid()) {
      for (const std::string& viol : report.violations)
        std::cerr << param << "=" << fmt9(v) << ": " << viol << "\n";
      return kExitInvalid;
    }
    const Field field = materialize(s, grid_options);
    const CurveEvaluator eval(field, s.effort);
    const MeanTimeResult mu = mean_time([&](double t) { return eval.true_prob(t); });
    const std::string mu_cell = mu.diverged ? std::string() : fmt9(mu.value);
    for (double t : times)
      csv << fmt9(v) << ',' << fmt9(t) << ',' << fmt9(eval.true_prob(t)) << ',' << mu_cell
          << '\n';
  }
  write_file(out, csv.str());
  emit_manifest("sweep", path,
                {{"param", param},
                 {"values", values},
                 {"times", times},
                 {"grid", grid_config(grid_options)},
                 {"tolerances", tolerance_config()}},
                {out}, clock);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"searchplan: uniformly optimal search plans for stationary targets"};
  app.require_subcommand(1);

  std::string scenario_path, out_path, strategy = "auto", param;
  std::vector<double> times, values;
  double budget = 1.0, step = 0.01, epsilon = 0.01, theta = 0.5, factor = 1.5;
  std::uint64_t seed = 424243;
  int trials = 0;

  CLI::App* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("scenario", scenario_path, "scenario JSON file")->required();

  CLI::App* plan = app.add_subcommand("plan", "compute the optimal plan");
  plan->add_option("scenario", scenario_path)->required();
  plan->add_option("--times", times, "evaluation times")->delimiter(',');
  plan->add_option("-o,--out", out_path, "output CSV")->required();

  CLI::App* eval = app.add_subcommand("eval", "evaluate detection curves");
  eval->add_option("scenario", scenario_path)->required();
  eval->add_option("--times", times)->delimiter(',');
  eval->add_option("-o,--out", out_path)->required();
  bool subjective_only = false;
  eval->add_flag("--subjective-only", subjective_only, "skip true-location columns");

  CLI::App* improve = app.add_subcommand("improve", "construct a strictly better distribution");
  improve->add_option("scenario", scenario_path)->required();
  improve->add_option("-o,--out", out_path, "improvement report JSON");
  improve->add_option("--strategy", strategy)
      ->check(CLI::IsMember({"auto", "bump", "shrink-support", "shrink-sigma"}));
  improve->add_option("--epsilon", epsilon, "repair mass");
  improve->add_option("--theta", theta, "concentration step");
  improve->add_option("--factor", factor, "density bump factor");

  CLI::App* verify = app.add_subcommand("verify", "cross-check the planner against oracles");
  verify->add_option("scenario", scenario_path)->required();
  verify->add_option("-K,--budget", budget)->required();
  verify->add_option("--step", step, "oracle effort quantum");
  verify->add_option("--seed", seed, "Monte Carlo seed");
  verify->add_option("--trials", trials, "Monte Carlo trials (0 = skip)");
  verify->add_option("-o,--out", out_path);

  CLI::App* sweep = app.add_subcommand("sweep", "evaluate a family parameter sweep");
  sweep->add_option("scenario", scenario_path)->required();
  sweep->add_option("--param", param)->required()->check(CLI::IsMember({"p", "sigma", "b"}));
  sweep->add_option("--values", values)->required()->delimiter(',');
  sweep->add_option("--times", times)->delimiter(',');
  sweep->add_option("-o,--out", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(scenario_path);
    if (plan->parsed()) return cmd_plan(scenario_path, times, out_path);
    if (eval->parsed()) return cmd_eval(scenario_path, times, out_path, subjective_only);
    if (improve->parsed())
      return cmd_improve(scenario_path, out_path, strategy, epsilon, theta, factor);
    if (verify->parsed()) return cmd_verify(scenario_path, budget, step, seed, trials, out_path);
    if (sweep->parsed()) return cmd_sweep(scenario_path, param, values, times, out_path);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const ScenarioParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUnreadable;
  } catch (const PlannerError& e) {
    std::cerr << e.what() << "\n";
    return kExitPlanner;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitPlanner;
  }
  return kExitOk;
}
