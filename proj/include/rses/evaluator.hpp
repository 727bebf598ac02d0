#pragma once

#include "rses/meter.hpp"
#include "rses/problem.hpp"
#include "rses/trace.hpp"

namespace rses {

/// Role of an evaluated point. Only candidates can become the best iterate;
/// auxiliary points (probes, finite-difference stencils) are charged and
/// logged but never returned as solutions.
enum class PointRole { candidate, auxiliary };

/// Binds a problem to a meter and a trace: every call is charged, validated
/// and appended to the trace before the residual is handed back.
class TracedEvaluator {
 public:
  TracedEvaluator(const ResidualProblem& problem, EvaluationMeter& meter, SolveTrace& trace);

  /// Throws BudgetExhausted when the meter refuses the charge.
  Vector evaluate(const Vector& x, PointRole role);

  /// Charges one gradient evaluation (Adam's axis). Throws UnsupportedProblem
  /// when the problem has no gradient.
  ResidualAndGradient evaluate_with_gradient(const Vector& x);

  const ResidualProblem& problem() const { return problem_; }
  EvaluationMeter& meter() { return meter_; }
  SolveTrace& trace() { return trace_; }
  bool has_best() const { return has_best_; }

 private:
  void record(const Vector& x, double residual_norm, std::int64_t index, PointRole role);

  const ResidualProblem& problem_;
  EvaluationMeter& meter_;
  SolveTrace& trace_;
  bool has_best_ = false;
  std::optional<double> best_error_;
};

}  // namespace rses
