#include "rses/evaluator.hpp"

#include <cmath>
#include <limits>

namespace rses {

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::not_started: return "not_started";
    case StopReason::tolerance: return "tolerance";
    case StopReason::iteration_cap: return "iteration_cap";
    case StopReason::budget: return "budget";
    case StopReason::time_cap: return "time_cap";
    case StopReason::numerical_failure: return "numerical_failure";
    case StopReason::solver_finished: return "solver_finished";
  }
  return "unknown";
}

std::string_view to_string(EvaluationCounter counter) {
  return counter == EvaluationCounter::residual ? "residual" : "gradient";
}

Vector ResidualProblem::operator()(const Vector& x, std::uint64_t call_key) const {
  if (x.size() != dim_params) {
    throw InvalidArgument(name + ": parameter vector has length " + std::to_string(x.size()) +
                          ", expected " + std::to_string(dim_params));
  }
  Vector r = evaluate(x, call_key);
  if (r.size() != dim_residual) {
    throw InvalidArgument(name + ": residual has length " + std::to_string(r.size()) +
                          ", expected " + std::to_string(dim_residual));
  }
  return r;
}

void validate_problem(const ResidualProblem& problem) {
  if (problem.dim_params < 1 || problem.dim_residual < 1) {
    throw InvalidArgument(problem.name + ": dimensions must be positive");
  }
  if (!problem.evaluate) throw InvalidArgument(problem.name + ": missing residual callback");
  if (problem.true_solution && problem.true_solution->size() != problem.dim_params) {
    throw InvalidArgument(problem.name + ": true solution has the wrong length");
  }
  if (problem.initial_guess.size() != problem.dim_params) {
    throw InvalidArgument(problem.name + ": initial guess has the wrong length");
  }
}

TracedEvaluator::TracedEvaluator(const ResidualProblem& problem, EvaluationMeter& meter,
                                 SolveTrace& trace)
    : problem_(problem), meter_(meter), trace_(trace) {
  trace_.best_residual_norm = std::numeric_limits<double>::infinity();
}

Vector TracedEvaluator::evaluate(const Vector& x, PointRole role) {
  const std::int64_t index = meter_.try_charge();
  if (index < 0) throw BudgetExhausted(problem_.name + ": evaluation budget exhausted");
  Vector r = problem_(x, static_cast<std::uint64_t>(index));
  double norm = r.norm();
  if (!std::isfinite(norm)) norm = std::numeric_limits<double>::infinity();
  record(x, norm, index, role);
  return r;
}

ResidualAndGradient TracedEvaluator::evaluate_with_gradient(const Vector& x) {
  if (!problem_.has_gradient()) {
    throw UnsupportedProblem(problem_.name + ": no gradient available");
  }
  if (x.size() != problem_.dim_params) {
    throw InvalidArgument(problem_.name + ": parameter vector has the wrong length");
  }
  const std::int64_t index = meter_.try_charge();
  if (index < 0) throw BudgetExhausted(problem_.name + ": gradient budget exhausted");
  ResidualAndGradient out = problem_.gradient(x);
  double norm = out.residual.norm();
  if (!std::isfinite(norm)) norm = std::numeric_limits<double>::infinity();
  record(x, norm, index, PointRole::candidate);
  return out;
}

void TracedEvaluator::record(const Vector& x, double residual_norm, std::int64_t index,
                             PointRole role) {
  if (role == PointRole::candidate && (!has_best_ || residual_norm < trace_.best_residual_norm)) {
    has_best_ = true;
    trace_.best_residual_norm = residual_norm;
    trace_.best_iterate = x;
    if (problem_.true_solution) best_error_ = (x - *problem_.true_solution).norm();
  }
  EvaluationRecord rec;
  rec.eval_index = index + 1;
  rec.residual_norm = residual_norm;
  rec.best_residual_norm = trace_.best_residual_norm;
  rec.best_param_error = best_error_;
  rec.wall_time_s = meter_.elapsed_s();
  trace_.evaluations.push_back(rec);
}

}  // namespace rses
