#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "rses/baselines.hpp"

namespace rses {

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::gauss_newton: return "gn";
    case BaselineKind::eki: return "eki";
    case BaselineKind::adam: return "adam";
    case BaselineKind::xnes: return "xnes";
  }
  return "unknown";
}

void BaselineConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  switch (kind) {
    case BaselineKind::gauss_newton:
      if (!positive(gauss_newton.fd_step) || !positive(gauss_newton.damping)) {
        throw InvalidArgument("gauss-newton: fd_step and damping must be positive");
      }
      break;
    case BaselineKind::eki:
      if (eki.ensemble_size != 0 && eki.ensemble_size < 2) {
        throw InvalidArgument("eki: ensemble size must be at least 2");
      }
      if (!positive(eki.step) || !positive(eki.initial_spread) ||
          !positive(eki.observation_noise)) {
        throw InvalidArgument("eki: step, spread and observation noise must be positive");
      }
      break;
    case BaselineKind::adam:
      if (!positive(adam.rate) || !positive(adam.epsilon) || !(adam.beta1 >= 0.0) ||
          !(adam.beta1 < 1.0) || !(adam.beta2 >= 0.0) || !(adam.beta2 < 1.0)) {
        throw InvalidArgument("adam: rate/epsilon positive, decays in [0, 1)");
      }
      break;
    case BaselineKind::xnes:
      if (xnes.population != 0 && xnes.population < 2) {
        throw InvalidArgument("xnes: population must be at least 2");
      }
      if (!positive(xnes.initial_scale) || !positive(xnes.mean_rate) || xnes.scale_rate < 0.0 ||
          xnes.shape_rate < 0.0) {
        throw InvalidArgument("xnes: scale and rates must be positive");
      }
      break;
  }
}

Matrix finite_difference_jacobian(TracedEvaluator& evaluator, const Vector& x, double step,
                                  const Vector* base) {
  if (!(step > 0.0)) throw InvalidArgument("finite_difference_jacobian: step must be positive");
  const ResidualProblem& problem = evaluator.problem();
  const Vector r0 = base ? *base : evaluator.evaluate(x, PointRole::candidate);
  Matrix jac(problem.dim_residual, problem.dim_params);
  Vector shifted = x;
  for (Index j = 0; j < problem.dim_params; ++j) {
    const double h = step * std::max(1.0, std::abs(x[j]));
    shifted[j] = x[j] + h;
    // Use the step actually represented in floating point.
    const double dh = shifted[j] - x[j];
    jac.col(j) = (evaluator.evaluate(shifted, PointRole::auxiliary) - r0) / dh;
    shifted[j] = x[j];
  }
  return jac;
}

SolveTrace gauss_newton_run(const ResidualProblem& problem, const Vector& x0,
                            const GaussNewtonOptions& options, EvaluationMeter& meter) {
  validate_problem(problem);
  if (x0.size() != problem.dim_params) throw InvalidArgument("gauss_newton_run: bad x0 length");
  SolveTrace trace;
  trace.solver = "gn";
  TracedEvaluator evaluator(problem, meter, trace);
  const Index n = problem.dim_params;

  Vector x = x0;
  trace.final_iterate = x;
  Vector r;
  try {
    r = evaluator.evaluate(x, PointRole::candidate);
  } catch (const BudgetExhausted&) {
    trace.stop = StopReason::budget;
    return trace;
  }
  trace.stop = StopReason::budget;
  while (true) {
    if (!r.allFinite()) {
      trace.stop = StopReason::numerical_failure;
      trace.failure_message = "non-finite residual";
      break;
    }
    if (r.norm() < options.tolerance) {
      trace.stop = StopReason::tolerance;
      break;
    }
    if (meter.time_exceeded()) {
      trace.stop = StopReason::time_cap;
      break;
    }
    if (meter.remaining() < n + 1) break;
    const Matrix jac = finite_difference_jacobian(evaluator, x, options.fd_step, &r);
    Matrix normal = jac.transpose() * jac;
    normal.diagonal().array() += options.damping;
    Eigen::LLT<Matrix> llt(normal);
    const Vector delta = llt.solve(-(jac.transpose() * r));
    if (llt.info() != Eigen::Success || !delta.allFinite()) {
      trace.stop = StopReason::numerical_failure;
      trace.failure_message = "singular Gauss-Newton normal matrix";
      break;
    }
    x += delta;
    r = evaluator.evaluate(x, PointRole::candidate);
    trace.final_iterate = x;
    ++trace.iterations;
    trace.iteration_ends.push_back(meter.used());
  }
  return trace;
}

}  // namespace rses
