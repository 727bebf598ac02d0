#include "rses/harness.hpp"

#include <memory>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include "rses/problems.hpp"
#include "rses/random.hpp"

namespace rses::harness {

bool is_problem_name(std::string_view name) {
  return std::find(kProblemNames.begin(), kProblemNames.end(), name) != kProblemNames.end();
}

bool is_solver_name(std::string_view name) {
  return std::find(kSolverNames.begin(), kSolverNames.end(), name) != kSolverNames.end();
}

ResidualProblem build_problem(const ProblemSpec& spec, std::uint64_t trial_seed) {
  using namespace rses::problems;
  if (spec.name == "linear") return make_linear_problem();
  if (spec.name == "brownian") return make_brownian_problem(trial_seed);
  for (const MlpWidths& widths : kMlpWidths) {
    if (spec.name == "mlp" + std::to_string(widths.hidden1)) {
      return make_mlp_problem(widths, spec.seed, trial_seed);
    }
  }
  if (spec.name == "deconv-intact") return make_deconv_problem(Weighting::intact, spec.seed, trial_seed);
  if (spec.name == "deconv-perturbed") {
    return make_deconv_problem(Weighting::perturbed, spec.seed, trial_seed);
  }
  throw InvalidArgument("unknown problem '" + spec.name + "'");
}

void to_json(nlohmann::json& j, const ProblemSpec& spec) {
  j = nlohmann::json{{"name", spec.name}, {"seed", spec.seed}};
}

void from_json(const nlohmann::json& j, ProblemSpec& spec) {
  spec.name = j.value("name", spec.name);
  spec.seed = j.value("seed", spec.seed);
}

void to_json(nlohmann::json& j, const SolverSpec& spec) {
  j = nlohmann::json{{"name", spec.name}, {"time_cap_s", spec.time_cap_s}, {"record_time", spec.record_time}};
  if (spec.probe_count) j["k"] = *spec.probe_count;
  if (spec.probe_scale) j["sigma"] = *spec.probe_scale;
  if (spec.ridge_scale) j["beta"] = *spec.ridge_scale;
}

void from_json(const nlohmann::json& j, SolverSpec& spec) {
  spec.name = j.value("name", spec.name);
  spec.time_cap_s = j.value("time_cap_s", spec.time_cap_s);
  spec.record_time = j.value("record_time", spec.record_time);
  if (j.contains("k")) spec.probe_count = j.at("k").get<int>();
  if (j.contains("sigma")) spec.probe_scale = j.at("sigma").get<double>();
  if (j.contains("beta")) spec.ridge_scale = j.at("beta").get<double>();
}

SolverConfig rses_config_for(const ResidualProblem& problem, const SolverSpec& solver,
                             std::int64_t budget, std::uint64_t seed) {
  SolverConfig config = SolverConfig::prescribed(problem, budget, seed);
  if (solver.probe_count) {
    config.probe_count = *solver.probe_count;
    config.max_iterations = prescribe_iterations(budget, config.probe_count);
  }
  if (solver.probe_scale) config.probe_scale = *solver.probe_scale;
  if (solver.ridge_scale) config.ridge_scale = *solver.ridge_scale;
  config.validate();
  return config;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial) {
  return rng::derive_key({master_seed, trial});
}

int TrialSet::failed_trials() const {
  return static_cast<int>(
      std::count_if(traces.begin(), traces.end(), [](const SolveTrace& t) { return t.failed(); }));
}

namespace {

SolveTrace run_one(const ResidualProblem& problem, const SolverSpec& solver, std::int64_t budget,
                   std::uint64_t seed) {
  EvaluationMeter meter(budget, solver.time_cap_s, solver.record_time);
  const Vector& x0 = problem.initial_guess;
  if (solver.name == "rses") {
    return rses_run(problem, x0, rses_config_for(problem, solver, budget, seed), meter);
  }
  if (solver.name == "external") {
    std::unique_ptr<ExternalSolver> external =
        solver.external ? solver.external() : std::make_unique<CompassSearch>();
    return external_run(problem, x0, *external, meter);
  }
  BaselineConfig config = solver.baseline;
  config.seed = seed;
  if (solver.name == "gn") {
    config.kind = BaselineKind::gauss_newton;
    if (problem.stochastic) config.gauss_newton.tolerance = 0.0;
  } else if (solver.name == "eki") {
    config.kind = BaselineKind::eki;
  } else if (solver.name == "adam") {
    config.kind = BaselineKind::adam;
  } else if (solver.name == "xnes") {
    config.kind = BaselineKind::xnes;
  } else {
    throw InvalidArgument("unknown solver '" + solver.name + "'");
  }
  return baseline_run(problem, x0, config, meter);
}

}  // namespace

TrialSet run_trials(const ProblemSpec& problem, const SolverSpec& solver, int trials,
                    std::int64_t budget, std::uint64_t master_seed, int workers) {
  if (trials < 1) throw InvalidArgument("run_trials: trials must be at least 1");
  if (budget < 1) throw InvalidArgument("run_trials: budget must be at least 1");
  if (!is_problem_name(problem.name)) throw InvalidArgument("unknown problem '" + problem.name + "'");
  if (!is_solver_name(solver.name)) throw InvalidArgument("unknown solver '" + solver.name + "'");

  // Fail fast on configuration errors before any trial runs.
  {
    const ResidualProblem probe = build_problem(problem, trial_seed(master_seed, 0));
    if (solver.name == "adam" && !probe.has_gradient()) {
      throw UnsupportedProblem("adam needs a differentiable problem; '" + problem.name + "' is not");
    }
    if (solver.name == "rses") rses_config_for(probe, solver, budget, 0);
  }

  TrialSet set;
  set.problem = problem.name;
  set.solver = solver.name;
  set.counter = solver.name == "adam" ? EvaluationCounter::gradient : EvaluationCounter::residual;
  set.budget = budget;
  set.traces.resize(static_cast<std::size_t>(trials));

  auto run_trial = [&](int t) {
    const std::uint64_t seed = trial_seed(master_seed, static_cast<std::uint64_t>(t));
    const ResidualProblem instance = build_problem(problem, seed);
    SolveTrace trace;
    try {
      trace = run_one(instance, solver, budget, seed);
    } catch (const NumericalFailure& e) {
      trace.solver = solver.name;
      trace.stop = StopReason::numerical_failure;
      trace.failure_message = e.what();
    }
    set.traces[static_cast<std::size_t>(t)] = std::move(trace);
  };

  const ResidualProblem first = build_problem(problem, trial_seed(master_seed, 0));
  set.has_true_solution = first.true_solution.has_value();

  if (workers <= 1) {
    for (int t = 0; t < trials; ++t) run_trial(t);
  } else {
    std::vector<std::thread> pool;
    const int count = std::min(workers, trials);
    for (int w = 0; w < count; ++w) {
      pool.emplace_back([&, w] {
        for (int t = w; t < trials; t += count) run_trial(t);
      });
    }
    for (std::thread& th : pool) th.join();
  }
  return set;
}

EvaluationCounter TrialAggregate::counter() const {
  return solver == "adam" ? EvaluationCounter::gradient : EvaluationCounter::residual;
}

std::int64_t TrialAggregate::stopping_eval_index() const {
  if (mean_dist.empty()) throw InvalidArgument("stopping index of an empty aggregate");
  return static_cast<std::int64_t>(stopping_index(mean_dist)) + 1;
}

TrialAggregate aggregate_trials(const TrialSet& set) {
  TrialAggregate agg;
  agg.problem = set.problem;
  agg.solver = set.solver;
  agg.has_param_error = set.has_true_solution;

  std::vector<const SolveTrace*> usable;
  std::size_t length = 0;
  for (const SolveTrace& trace : set.traces) {
    if (trace.evaluations.empty()) continue;
    usable.push_back(&trace);
    length = std::max(length, trace.evaluations.size());
  }
  agg.trials = static_cast<int>(usable.size());
  if (usable.empty()) return agg;

  agg.mean_residual.assign(length, 0.0);
  agg.mean_best_residual.assign(length, 0.0);
  agg.mean_wall_time.assign(length, 0.0);
  agg.mean_dist.assign(length, 0.0);
  agg.rms_dist.assign(length, 0.0);
  if (agg.has_param_error) agg.mean_param_error.assign(length, 0.0);

  const double count = static_cast<double>(usable.size());
  for (const SolveTrace* trace : usable) {
    const auto& records = trace->evaluations;
    double running_error = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < length; ++i) {
      const EvaluationRecord& rec = records[std::min(i, records.size() - 1)];
      double dist = 0.0;
      if (agg.has_param_error) {
        const double err = rec.best_param_error.value_or(std::numeric_limits<double>::infinity());
        running_error = std::min(running_error, err);
        agg.mean_param_error[i] += err / count;
        dist = running_error;
      } else {
        dist = rec.best_residual_norm * rec.best_residual_norm;
      }
      agg.mean_residual[i] += rec.residual_norm / count;
      agg.mean_best_residual[i] += rec.best_residual_norm / count;
      agg.mean_wall_time[i] += rec.wall_time_s / count;
      agg.mean_dist[i] += dist / count;
      agg.rms_dist[i] += dist * dist / count;
    }
  }
  for (double& v : agg.rms_dist) v = std::sqrt(v);
  return agg;
}

std::size_t stopping_index(std::span<const double> series) {
  if (series.empty()) throw InvalidArgument("stopping_index: empty series");
  const double lowest = *std::min_element(series.begin(), series.end());
  if (!(lowest >= 0.0)) throw InvalidArgument("stopping_index: values must be nonnegative");
  const double threshold = 1.01 * lowest;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i] <= threshold) return i;
  }
  return series.size() - 1;
}

std::vector<ReportRow> report_at_index(std::span<const TrialAggregate> aggregates,
                                       std::int64_t eval_index, std::string_view label) {
  std::vector<ReportRow> rows;
  for (const TrialAggregate& agg : aggregates) {
    if (agg.length() == 0) continue;
    ReportRow row;
    row.problem = agg.problem;
    row.solver = agg.solver;
    row.label = std::string(label);
    row.counter = agg.counter();
    row.trials = agg.trials;
    row.capped = eval_index > agg.length();
    row.eval_index = std::clamp<std::int64_t>(eval_index, 1, agg.length());
    const auto i = static_cast<std::size_t>(row.eval_index - 1);
    row.residual_norm = agg.mean_best_residual[i];
    if (agg.has_param_error) row.param_error = agg.mean_param_error[i];
    row.distance = agg.mean_dist[i];
    row.wall_time_s = agg.mean_wall_time[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ReportRow> build_report(std::span<const TrialAggregate> aggregates) {
  std::vector<ReportRow> rows;
  const TrialAggregate* reference = nullptr;
  for (const TrialAggregate& agg : aggregates) {
    if (agg.length() == 0) continue;
    if (!reference || (agg.solver == "rses" && reference->solver != "rses")) reference = &agg;
  }
  if (!reference) return rows;
  rows = report_at_index(aggregates, reference->stopping_eval_index(), "stop");
  for (const TrialAggregate& agg : aggregates) {
    if (agg.length() == 0) continue;
    auto terminal = report_at_index(std::span(&agg, 1), agg.length(), "terminal");
    rows.insert(rows.end(), terminal.begin(), terminal.end());
  }
  return rows;
}

std::string format_report_text(std::span<const ReportRow> rows) {
  std::ostringstream out;
  out << std::left << std::setw(18) << "problem" << std::setw(10) << "solver" << std::setw(10)
      << "row" << std::setw(10) << "counter" << std::right << std::setw(10) << "eval" << std::setw(14)
      << "||F(x)||" << std::setw(14) << "||x-x*||" << std::setw(12) << "time (s)" << "  flags\n";
  for (const ReportRow& row : rows) {
    out << std::left << std::setw(18) << row.problem << std::setw(10) << row.solver << std::setw(10)
        << row.label << std::setw(10) << to_string(row.counter) << std::right << std::setw(10)
        << row.eval_index << std::scientific << std::setprecision(3) << std::setw(14)
        << row.residual_norm;
    if (row.param_error) {
      out << std::setw(14) << *row.param_error;
    } else {
      out << std::setw(14) << "-";
    }
    out << std::setw(12) << row.wall_time_s << std::defaultfloat << "  " << (row.capped ? "capped" : "")
        << "\n";
  }
  return out.str();
}

std::string_view to_string(AblationParam param) {
  switch (param) {
    case AblationParam::probe_count: return "k";
    case AblationParam::probe_scale: return "sigma";
    case AblationParam::ridge_scale: return "beta";
  }
  return "unknown";
}

AblationParam parse_ablation_param(std::string_view name) {
  if (name == "k") return AblationParam::probe_count;
  if (name == "sigma") return AblationParam::probe_scale;
  if (name == "beta") return AblationParam::ridge_scale;
  throw InvalidArgument("unknown ablation parameter '" + std::string(name) + "' (k, sigma, beta)");
}

void AblationGrid::validate() const {
  if (values.empty()) throw InvalidArgument("ablation grid: no values");
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("ablation grid: values must be positive");
    if (param == AblationParam::probe_count && v != std::floor(v)) {
      throw InvalidArgument("ablation grid: k values must be integers");
    }
  }
  if (fixed_probe_count < 1 || !(fixed_probe_scale > 0.0) || !(fixed_ridge_scale > 0.0)) {
    throw InvalidArgument("ablation grid: fixed values must be positive");
  }
}

std::vector<AblationRow> ablation_sweep(const AblationGrid& grid, const ProblemSpec& problem,
                                        int trials, std::int64_t budget,
                                        std::uint64_t master_seed, bool record_time) {
  grid.validate();
  std::vector<AblationRow> rows;
  for (double value : grid.values) {
    SolverSpec solver;
    solver.name = "rses";
    solver.record_time = record_time;
    solver.probe_count = grid.fixed_probe_count;
    solver.probe_scale = grid.fixed_probe_scale;
    solver.ridge_scale = grid.fixed_ridge_scale;
    switch (grid.param) {
      case AblationParam::probe_count: solver.probe_count = static_cast<int>(value); break;
      case AblationParam::probe_scale: solver.probe_scale = value; break;
      case AblationParam::ridge_scale: solver.ridge_scale = value; break;
    }
    const TrialSet set = run_trials(problem, solver, trials, budget, master_seed);
    AblationRow row;
    row.param = grid.param;
    row.value = value;
    row.min_terminal_residual = std::numeric_limits<double>::infinity();
    row.max_terminal_residual = 0.0;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const SolveTrace& trace : set.traces) {
      if (trace.evaluations.empty()) continue;
      const double terminal = trace.evaluations.back().best_residual_norm;
      sum += terminal;
      sum_sq += terminal * terminal;
      row.min_terminal_residual = std::min(row.min_terminal_residual, terminal);
      row.max_terminal_residual = std::max(row.max_terminal_residual, terminal);
      ++row.trials;
    }
    if (row.trials > 0) {
      row.mean_terminal_residual = sum / row.trials;
      row.rms_terminal_residual = std::sqrt(sum_sq / row.trials);
    }
    rows.push_back(row);
  }
  auto best = std::min_element(rows.begin(), rows.end(), [](const AblationRow& a, const AblationRow& b) {
    return a.mean_terminal_residual < b.mean_terminal_residual;
  });
  best->is_min = true;
  return rows;
}

}  // namespace rses::harness
