#pragma once

#include <cstdint>

#include "rses/evaluator.hpp"
#include "rses/meter.hpp"
#include "rses/problem.hpp"
#include "rses/trace.hpp"
#include "rses/types.hpp"

namespace rses {

/// Knobs of the residual subspace evolution strategy.
struct SolverConfig {
  static constexpr double kDefaultProbeScale = 0.05;
  static constexpr double kDefaultRidgeScale = 1e-5;
  static constexpr double kDefaultFloor = 1e-8;
  static constexpr double kDeterministicTolerance = 1e-12;

  int probe_count = 1;                          // k
  double probe_scale = kDefaultProbeScale;      // sigma
  double ridge_scale = kDefaultRidgeScale;      // beta
  double tolerance = kDeterministicTolerance;   // stop once ||r|| < tolerance
  std::int64_t max_iterations = 1;              // T
  double floor = kDefaultFloor;                 // epsilon
  std::uint64_t seed = 0;

  void validate() const;

  /// k from the residual dimension, T from the budget, sigma from the problem's
  /// hint (else 0.05), tolerance 1e-12 on deterministic problems and 0 otherwise.
  static SolverConfig prescribed(const ResidualProblem& problem, std::int64_t budget,
                                 std::uint64_t seed = 0);
};

/// One iteration's probes P (n x k), differences B (m x k) and base residual r_t.
struct ProbeBatch {
  Matrix probes;
  Matrix differences;
  Vector base_residual;
};

struct RidgeSolution {
  Vector weights;
  /// Ridge actually used (doubled once if the first factorisation failed).
  double ridge = 0.0;
  /// Ratio of the largest to the smallest squared Cholesky pivot.
  double gram_condition_hint = 0.0;
};

/// max(ridge_scale * residual_norm^2, floor).
double lambda_schedule(double ridge_scale, double residual_norm, double floor);

/// 4 + floor(3 ln m).
int prescribe_probe_count(Index dim_residual);

/// floor(budget / (probe_count + 1)).
std::int64_t prescribe_iterations(std::int64_t budget, int probe_count);

/// Key of the probe stream for one iteration; column i draws from
/// derive_key({seed, iteration, i}) so probes are order-independent.
struct ProbeStreamKey {
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
};

Matrix draw_probes(Index dim_params, int probe_count, double probe_scale, ProbeStreamKey key);

/// Evaluates F(x + p_i) for every probe column and stores the differences
/// against `base_residual`. Charges exactly k evaluations; BudgetExhausted
/// propagates with the already-charged evaluations left in the trace.
ProbeBatch collect_differences(TracedEvaluator& evaluator, const Vector& x,
                               const Vector& base_residual, const Matrix& probes);

/// Solves (B^T B + ridge I) w = -B^T r through a Cholesky factorisation of the
/// explicitly formed k x k Gram matrix.
RidgeSolution ridge_weights(const Matrix& differences, const Vector& residual, double ridge);

/// r + B w.
Vector surrogate_predict(const Vector& base_residual, const Matrix& differences,
                         const Vector& weights);

/// x + P w.
Vector apply_update(const Vector& x, const Matrix& probes, const Vector& weights);

/// Full RSES loop. Stops on tolerance, iteration cap, budget (an iteration is
/// only started when k + 1 evaluations remain), wall-clock cap or a failed
/// ridge solve; the trace keeps both the final and the least-residual iterate.
SolveTrace rses_run(const ResidualProblem& problem, const Vector& x0, const SolverConfig& config,
                    EvaluationMeter& meter);

}  // namespace rses
