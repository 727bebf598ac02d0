#include <cmath>

#include "rses/baselines.hpp"

namespace rses {

SolveTrace baseline_run(const ResidualProblem& problem, const Vector& x0,
                        const BaselineConfig& config, EvaluationMeter& meter) {
  config.validate();
  switch (config.kind) {
    case BaselineKind::gauss_newton: return gauss_newton_run(problem, x0, config.gauss_newton, meter);
    case BaselineKind::eki: return eki_run(problem, x0, config.eki, config.seed, meter);
    case BaselineKind::adam: return adam_run(problem, x0, config.adam, meter);
    case BaselineKind::xnes: return xnes_run(problem, x0, config.xnes, config.seed, meter);
  }
  throw InvalidArgument("baseline_run: unknown solver kind");
}

SolveTrace external_run(const ResidualProblem& problem, const Vector& x0, ExternalSolver& solver,
                        EvaluationMeter& meter) {
  validate_problem(problem);
  if (x0.size() != problem.dim_params) throw InvalidArgument("external_run: bad x0 length");
  SolveTrace trace;
  trace.solver = solver.name();
  TracedEvaluator evaluator(problem, meter, trace);
  trace.final_iterate = x0;
  try {
    solver.start(x0, evaluator.evaluate(x0, PointRole::candidate).norm());
    trace.stop = StopReason::solver_finished;
    for (;;) {
      if (meter.time_exceeded()) {
        trace.stop = StopReason::time_cap;
        break;
      }
      const std::vector<Vector> batch = solver.propose();
      if (batch.empty()) break;
      std::vector<double> norms;
      norms.reserve(batch.size());
      for (const Vector& point : batch) {
        if (point.size() != problem.dim_params) {
          throw InvalidArgument(solver.name() + ": proposed point has the wrong length");
        }
        norms.push_back(evaluator.evaluate(point, PointRole::candidate).norm());
      }
      solver.receive(norms);
      ++trace.iterations;
      trace.iteration_ends.push_back(meter.used());
    }
  } catch (const BudgetExhausted&) {
    trace.stop = StopReason::budget;
  }
  if (evaluator.has_best()) trace.final_iterate = trace.best_iterate;
  return trace;
}

CompassSearch::CompassSearch(double initial_step, double min_step)
    : step_(initial_step), min_step_(min_step) {
  if (!(initial_step > 0.0) || !(min_step > 0.0)) {
    throw InvalidArgument("CompassSearch: steps must be positive");
  }
}

void CompassSearch::start(const Vector& x0, double initial_residual_norm) {
  center_ = x0;
  center_norm_ = initial_residual_norm;
}

std::vector<Vector> CompassSearch::propose() {
  pending_.clear();
  if (step_ < min_step_) return pending_;
  for (Index j = 0; j < center_.size(); ++j) {
    for (double sign : {1.0, -1.0}) {
      Vector p = center_;
      p[j] += sign * step_;
      pending_.push_back(std::move(p));
    }
  }
  return pending_;
}

void CompassSearch::receive(std::span<const double> residual_norms) {
  std::size_t best = residual_norms.size();
  double best_norm = center_norm_;
  for (std::size_t i = 0; i < residual_norms.size(); ++i) {
    if (residual_norms[i] < best_norm) {
      best_norm = residual_norms[i];
      best = i;
    }
  }
  if (best < residual_norms.size()) {
    center_ = pending_[best];
    center_norm_ = best_norm;
  } else {
    step_ *= 0.5;
  }
}

}  // namespace rses
