#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rses/types.hpp"

namespace rses {

struct EvaluationRecord {
  /// Number of calls charged so far, including this one (1-based).
  std::int64_t eval_index = 0;
  double residual_norm = 0.0;
  /// Least residual norm over candidate iterates so far.
  double best_residual_norm = 0.0;
  /// ||x_best - x_star|| when the problem knows x_star.
  std::optional<double> best_param_error;
  double wall_time_s = 0.0;
};

enum class StopReason {
  not_started,
  tolerance,
  iteration_cap,
  budget,
  time_cap,
  numerical_failure,
  solver_finished,
};

std::string_view to_string(StopReason reason);

/// Which counter the eval_index axis refers to.
enum class EvaluationCounter { residual, gradient };

std::string_view to_string(EvaluationCounter counter);

struct SolveTrace {
  std::string solver;
  EvaluationCounter counter = EvaluationCounter::residual;
  std::vector<EvaluationRecord> evaluations;
  Vector final_iterate;
  Vector best_iterate;
  double best_residual_norm = 0.0;
  std::int64_t iterations = 0;
  /// Evaluation count at the end of each completed iteration.
  std::vector<std::int64_t> iteration_ends;
  StopReason stop = StopReason::not_started;
  std::string failure_message;

  std::int64_t total_evaluations() const {
    return evaluations.empty() ? 0 : evaluations.back().eval_index;
  }
  bool failed() const { return stop == StopReason::numerical_failure; }
};

}  // namespace rses
