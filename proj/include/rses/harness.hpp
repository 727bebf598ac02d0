#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rses/baselines.hpp"
#include "rses/problem.hpp"
#include "rses/solver.hpp"
#include "rses/trace.hpp"

namespace rses::harness {

inline constexpr std::array<std::string_view, 8> kProblemNames = {
    "linear", "brownian", "mlp8", "mlp16", "mlp32", "mlp64", "deconv-intact", "deconv-perturbed"};
inline constexpr std::array<std::string_view, 6> kSolverNames = {"rses", "gn",   "eki",
                                                                 "adam", "xnes", "external"};

inline constexpr std::int64_t kDefaultBudget = 7500;
inline constexpr int kDefaultTrials = 10;

bool is_problem_name(std::string_view name);
bool is_solver_name(std::string_view name);

/// Names a benchmark; `seed` fixes the benchmark instance (MLP data, blur and
/// observation noise). Per-trial randomness comes from the trial seed.
struct ProblemSpec {
  std::string name = "linear";
  std::uint64_t seed = 0;
};

/// Builds the residual map for one trial.
ResidualProblem build_problem(const ProblemSpec& spec, std::uint64_t trial_seed);

using ExternalFactory = std::function<std::unique_ptr<ExternalSolver>()>;

struct SolverSpec {
  std::string name = "rses";
  std::optional<int> probe_count;
  std::optional<double> probe_scale;
  std::optional<double> ridge_scale;
  double time_cap_s = EvaluationMeter::kDefaultWallClockCapS;
  /// Off: traces carry zero wall time and are byte-reproducible.
  bool record_time = true;
  BaselineConfig baseline;
  /// Used by the "external" solver; defaults to CompassSearch when empty.
  ExternalFactory external;
};

void to_json(nlohmann::json& j, const ProblemSpec& spec);
void from_json(const nlohmann::json& j, ProblemSpec& spec);
void to_json(nlohmann::json& j, const SolverSpec& spec);
void from_json(const nlohmann::json& j, SolverSpec& spec);

/// RSES configuration for a problem and budget, with explicit overrides applied.
SolverConfig rses_config_for(const ResidualProblem& problem, const SolverSpec& solver,
                             std::int64_t budget, std::uint64_t seed);

/// Seed of trial `trial` under `master_seed`.
std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial);

struct TrialSet {
  std::string problem;
  std::string solver;
  EvaluationCounter counter = EvaluationCounter::residual;
  std::int64_t budget = 0;
  bool has_true_solution = false;
  std::vector<SolveTrace> traces;

  int failed_trials() const;
};

/// Runs `trials` independent seeded trials; a numerical failure is recorded in
/// the trial's trace rather than thrown. `workers` > 1 runs trials concurrently
/// with identical results.
TrialSet run_trials(const ProblemSpec& problem, const SolverSpec& solver, int trials,
                    std::int64_t budget, std::uint64_t master_seed, int workers = 1);

/// Statistics across trials on the shared evaluation axis 1..length, where
/// length is the longest trace; shorter traces carry their last record forward.
struct TrialAggregate {
  std::string problem;
  std::string solver;
  int trials = 0;
  bool has_param_error = false;
  std::vector<double> mean_residual;
  std::vector<double> mean_best_residual;
  /// Mean error of the least-residual iterate (empty when x_star is unknown).
  std::vector<double> mean_param_error;
  std::vector<double> mean_wall_time;
  /// Best-so-far distance: running minimum of the parameter error when x_star
  /// is known, else the best loss ||r||^2.
  std::vector<double> mean_dist;
  std::vector<double> rms_dist;

  std::int64_t length() const { return static_cast<std::int64_t>(mean_dist.size()); }
  EvaluationCounter counter() const;
  /// 1-based evaluation index where mean_dist first comes within 1% of its minimum.
  std::int64_t stopping_eval_index() const;

  bool operator==(const TrialAggregate&) const = default;
};

TrialAggregate aggregate_trials(const TrialSet& trials);

/// Zero-based position of the first entry <= 1.01 * min(series).
std::size_t stopping_index(std::span<const double> series);

struct ReportRow {
  std::string problem;
  std::string solver;
  std::string label;  // "stop" or "terminal"
  EvaluationCounter counter = EvaluationCounter::residual;
  std::int64_t eval_index = 0;
  double residual_norm = 0.0;
  std::optional<double> param_error;
  double distance = 0.0;
  double wall_time_s = 0.0;
  /// The requested index lies beyond this solver's trace; terminal values reported.
  bool capped = false;
  int trials = 0;
};

/// One row per aggregate at `eval_index`.
std::vector<ReportRow> report_at_index(std::span<const TrialAggregate> aggregates,
                                       std::int64_t eval_index, std::string_view label = "stop");

/// Stopping-index rows (index from the rses aggregate, else the first one)
/// followed by terminal rows.
std::vector<ReportRow> build_report(std::span<const TrialAggregate> aggregates);

std::string format_report_text(std::span<const ReportRow> rows);

enum class AblationParam { probe_count, probe_scale, ridge_scale };

std::string_view to_string(AblationParam param);
AblationParam parse_ablation_param(std::string_view name);

struct AblationGrid {
  AblationParam param = AblationParam::ridge_scale;
  std::vector<double> values;
  int fixed_probe_count = 30;
  double fixed_probe_scale = 0.9;
  double fixed_ridge_scale = 0.2;

  void validate() const;
};

struct AblationRow {
  AblationParam param = AblationParam::ridge_scale;
  double value = 0.0;
  int trials = 0;
  double mean_terminal_residual = 0.0;
  double rms_terminal_residual = 0.0;
  double min_terminal_residual = 0.0;
  double max_terminal_residual = 0.0;
  bool is_min = false;
};

/// RSES per grid value; marks the value with the least mean terminal residual.
std::vector<AblationRow> ablation_sweep(const AblationGrid& grid, const ProblemSpec& problem,
                                        int trials, std::int64_t budget,
                                        std::uint64_t master_seed, bool record_time = true);

}  // namespace rses::harness
