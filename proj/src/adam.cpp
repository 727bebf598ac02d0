#include <cmath>

#include "rses/baselines.hpp"

namespace rses {

AdamState::AdamState(Index dim, const AdamOptions& options)
    : options_(options), first_(Vector::Zero(dim)), second_(Vector::Zero(dim)) {}

Vector AdamState::step(const Vector& gradient) {
  if (gradient.size() != first_.size()) throw InvalidArgument("AdamState: gradient length");
  ++t_;
  first_ = options_.beta1 * first_ + (1.0 - options_.beta1) * gradient;
  second_ = options_.beta2 * second_ + (1.0 - options_.beta2) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  const Vector m_hat = first_ / c1;
  const Vector v_hat = second_ / c2;
  return -options_.rate * (m_hat.array() / (v_hat.array().sqrt() + options_.epsilon)).matrix();
}

SolveTrace adam_run(const ResidualProblem& problem, const Vector& x0, const AdamOptions& options,
                    EvaluationMeter& meter) {
  validate_problem(problem);
  if (!problem.has_gradient()) {
    throw UnsupportedProblem(problem.name + ": Adam needs an analytic gradient");
  }
  if (x0.size() != problem.dim_params) throw InvalidArgument("adam_run: bad x0 length");

  SolveTrace trace;
  trace.solver = "adam";
  trace.counter = EvaluationCounter::gradient;
  TracedEvaluator evaluator(problem, meter, trace);
  AdamState state(problem.dim_params, options);

  Vector x = x0;
  trace.final_iterate = x;
  trace.stop = StopReason::budget;
  while (!meter.exhausted()) {
    if (meter.time_exceeded()) {
      trace.stop = StopReason::time_cap;
      break;
    }
    const ResidualAndGradient value = evaluator.evaluate_with_gradient(x);
    if (!value.gradient.allFinite()) {
      trace.stop = StopReason::numerical_failure;
      trace.failure_message = "non-finite gradient";
      break;
    }
    x += state.step(value.gradient);
    trace.final_iterate = x;
    ++trace.iterations;
    trace.iteration_ends.push_back(meter.used());
  }
  return trace;
}

}  // namespace rses
