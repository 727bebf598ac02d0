#include "rses/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "rses/random.hpp"

namespace rses {

void SolverConfig::validate() const {
  if (probe_count < 1) throw InvalidArgument("probe_count must be at least 1");
  if (!(probe_scale > 0.0) || !std::isfinite(probe_scale)) {
    throw InvalidArgument("probe_scale must be positive and finite");
  }
  if (!(ridge_scale > 0.0) || !std::isfinite(ridge_scale)) {
    throw InvalidArgument("ridge_scale must be positive and finite");
  }
  if (!(tolerance >= 0.0)) throw InvalidArgument("tolerance must be nonnegative");
  if (max_iterations < 0) throw InvalidArgument("max_iterations must be nonnegative");
  if (!(floor > 0.0) || !std::isfinite(floor)) {
    throw InvalidArgument("floor must be positive and finite");
  }
}

SolverConfig SolverConfig::prescribed(const ResidualProblem& problem, std::int64_t budget,
                                      std::uint64_t seed) {
  SolverConfig config;
  config.probe_count = prescribe_probe_count(problem.prescription_dim.value_or(problem.dim_residual));
  config.probe_scale = problem.probe_scale_hint.value_or(kDefaultProbeScale);
  config.tolerance = problem.stochastic ? 0.0 : kDeterministicTolerance;
  config.max_iterations = prescribe_iterations(budget, config.probe_count);
  config.seed = seed;
  return config;
}

double lambda_schedule(double ridge_scale, double residual_norm, double floor) {
  if (!std::isfinite(ridge_scale) || !std::isfinite(residual_norm) || !std::isfinite(floor)) {
    throw InvalidArgument("lambda_schedule: inputs must be finite");
  }
  if (!(ridge_scale > 0.0) || !(floor > 0.0) || residual_norm < 0.0) {
    throw InvalidArgument("lambda_schedule: ridge_scale and floor must be positive");
  }
  return std::max(ridge_scale * residual_norm * residual_norm, floor);
}

int prescribe_probe_count(Index dim_residual) {
  if (dim_residual < 1) throw InvalidArgument("prescribe_probe_count: m must be at least 1");
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dim_residual))));
}

std::int64_t prescribe_iterations(std::int64_t budget, int probe_count) {
  if (budget < 0) throw InvalidArgument("prescribe_iterations: budget must be nonnegative");
  if (probe_count < 1) throw InvalidArgument("prescribe_iterations: probe_count must be >= 1");
  return budget / (probe_count + 1);
}

Matrix draw_probes(Index dim_params, int probe_count, double probe_scale, ProbeStreamKey key) {
  if (dim_params < 1 || probe_count < 1) throw InvalidArgument("draw_probes: empty shape");
  if (!(probe_scale >= 0.0) || !std::isfinite(probe_scale)) {
    throw InvalidArgument("draw_probes: probe_scale must be finite and nonnegative");
  }
  Matrix probes(dim_params, probe_count);
  for (int i = 0; i < probe_count; ++i) {
    rng::Stream stream(rng::derive_key({key.seed, key.iteration, static_cast<std::uint64_t>(i)}));
    stream.fill_normal(std::span<double>(probes.col(i).data(), static_cast<std::size_t>(dim_params)));
  }
  probes *= probe_scale;
  return probes;
}

ProbeBatch collect_differences(TracedEvaluator& evaluator, const Vector& x,
                               const Vector& base_residual, const Matrix& probes) {
  const ResidualProblem& problem = evaluator.problem();
  if (x.size() != problem.dim_params || probes.rows() != problem.dim_params ||
      base_residual.size() != problem.dim_residual) {
    throw InvalidArgument("collect_differences: dimension mismatch");
  }
  ProbeBatch batch;
  batch.probes = probes;
  batch.base_residual = base_residual;
  batch.differences.resize(problem.dim_residual, probes.cols());
  for (Index i = 0; i < probes.cols(); ++i) {
    batch.differences.col(i) =
        evaluator.evaluate(x + probes.col(i), PointRole::auxiliary) - base_residual;
  }
  return batch;
}

namespace {

bool solve_gram(const Matrix& differences, const Vector& rhs, double ridge, RidgeSolution& out) {
  const Index k = differences.cols();
  Matrix gram = differences.transpose() * differences;
  gram.diagonal().array() += ridge;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) return false;
  Vector w = llt.solve(rhs);
  if (!w.allFinite()) return false;
  const Vector pivots = Eigen::MatrixXd(llt.matrixL()).diagonal();
  const double largest = pivots.cwiseAbs().maxCoeff();
  const double smallest = pivots.cwiseAbs().minCoeff();
  out.weights = std::move(w);
  out.ridge = ridge;
  out.gram_condition_hint = k == 0 || smallest == 0.0 ? 0.0 : (largest * largest) / (smallest * smallest);
  return true;
}

}  // namespace

RidgeSolution ridge_weights(const Matrix& differences, const Vector& residual, double ridge) {
  if (differences.rows() != residual.size()) {
    throw InvalidArgument("ridge_weights: B has " + std::to_string(differences.rows()) +
                          " rows but r has length " + std::to_string(residual.size()));
  }
  if (!(ridge > 0.0) || !std::isfinite(ridge)) {
    throw InvalidArgument("ridge_weights: ridge must be positive and finite");
  }
  if (!differences.allFinite() || !residual.allFinite()) {
    throw InvalidArgument("ridge_weights: B and r must be finite");
  }
  const Vector rhs = -(differences.transpose() * residual);
  RidgeSolution solution;
  if (solve_gram(differences, rhs, ridge, solution)) return solution;
  if (solve_gram(differences, rhs, 2.0 * ridge, solution)) return solution;
  throw NumericalFailure("ridge_weights: Gram factorisation failed after doubling the ridge");
}

Vector surrogate_predict(const Vector& base_residual, const Matrix& differences,
                         const Vector& weights) {
  if (differences.rows() != base_residual.size() || differences.cols() != weights.size()) {
    throw InvalidArgument("surrogate_predict: dimension mismatch");
  }
  return base_residual + differences * weights;
}

Vector apply_update(const Vector& x, const Matrix& probes, const Vector& weights) {
  if (probes.rows() != x.size() || probes.cols() != weights.size()) {
    throw InvalidArgument("apply_update: dimension mismatch");
  }
  return x + probes * weights;
}

SolveTrace rses_run(const ResidualProblem& problem, const Vector& x0, const SolverConfig& config,
                    EvaluationMeter& meter) {
  validate_problem(problem);
  config.validate();
  if (x0.size() != problem.dim_params) throw InvalidArgument("rses_run: x0 has the wrong length");
  if (meter.remaining() < 1) throw InvalidArgument("rses_run: meter has no budget left");

  SolveTrace trace;
  trace.solver = "rses";
  TracedEvaluator evaluator(problem, meter, trace);
  const std::int64_t per_iteration = config.probe_count + 1;

  Vector x = x0;
  Vector r = evaluator.evaluate(x, PointRole::candidate);
  trace.final_iterate = x;
  if (!r.allFinite()) {
    trace.stop = StopReason::numerical_failure;
    trace.failure_message = "non-finite residual at the initial iterate";
    return trace;
  }
  double lambda = lambda_schedule(config.ridge_scale, r.norm(), config.floor);

  trace.stop = StopReason::iteration_cap;
  for (std::int64_t t = 0; t < config.max_iterations; ++t) {
    if (r.norm() < config.tolerance) {
      trace.stop = StopReason::tolerance;
      break;
    }
    if (meter.time_exceeded()) {
      trace.stop = StopReason::time_cap;
      break;
    }
    if (meter.remaining() < per_iteration) {
      trace.stop = StopReason::budget;
      break;
    }
    const Matrix probes = draw_probes(problem.dim_params, config.probe_count, config.probe_scale,
                                      {config.seed, static_cast<std::uint64_t>(t)});
    const ProbeBatch batch = collect_differences(evaluator, x, r, probes);

    RidgeSolution solution;
    try {
      solution = ridge_weights(batch.differences, r, lambda);
    } catch (const std::exception& e) {
      // Either a failed factorisation or a non-finite probe residual.
      trace.stop = StopReason::numerical_failure;
      trace.failure_message = e.what();
      break;
    }
    x = apply_update(x, probes, solution.weights);
    r = evaluator.evaluate(x, PointRole::candidate);
    trace.final_iterate = x;
    ++trace.iterations;
    trace.iteration_ends.push_back(meter.used());
    if (!r.allFinite()) {
      trace.stop = StopReason::numerical_failure;
      trace.failure_message = "non-finite residual after update";
      break;
    }
    lambda = lambda_schedule(config.ridge_scale, r.norm(), config.floor);
  }
  if (trace.stop == StopReason::iteration_cap && r.norm() < config.tolerance) {
    trace.stop = StopReason::tolerance;
  }
  return trace;
}

}  // namespace rses
