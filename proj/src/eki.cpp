#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "rses/baselines.hpp"
#include "rses/random.hpp"

namespace rses {

namespace {
constexpr std::uint64_t kEnsembleTag = 0xE4B1'0001;
constexpr std::uint64_t kPerturbationTag = 0xE4B1'0002;
}  // namespace

int EkiOptions::default_ensemble_size(Index dim_params) {
  return static_cast<int>(std::min<Index>(2 * dim_params, 100));
}

// Update per step, with D_x, D_g the centred member/residual deviations and
// Y the perturbed zero-observations:
//   X += D_x (gamma (J - 1) / h I + D_g^T D_g)^{-1} D_g^T (Y - G),
// which equals X += h C_xg (h C_gg + gamma I)^{-1} (Y - G) by the Woodbury
// identity but only needs a J x J factorisation.
SolveTrace eki_run(const ResidualProblem& problem, const Vector& x0, const EkiOptions& options,
                   std::uint64_t seed, EvaluationMeter& meter) {
  validate_problem(problem);
  if (x0.size() != problem.dim_params) throw InvalidArgument("eki_run: bad x0 length");
  const Index n = problem.dim_params;
  const Index m = problem.dim_residual;
  const int members =
      options.ensemble_size > 0 ? options.ensemble_size : EkiOptions::default_ensemble_size(n);
  if (members < 2) throw InvalidArgument("eki_run: ensemble size must be at least 2");

  SolveTrace trace;
  trace.solver = "eki";
  TracedEvaluator evaluator(problem, meter, trace);

  Matrix ensemble(n, members);
  for (int j = 0; j < members; ++j) {
    rng::Stream stream(rng::derive_key({seed, kEnsembleTag, static_cast<std::uint64_t>(j)}));
    for (Index i = 0; i < n; ++i) ensemble(i, j) = x0[i] + options.initial_spread * stream.normal();
  }
  trace.final_iterate = ensemble.rowwise().mean();

  const double noise_std = std::sqrt(options.observation_noise);
  Matrix outputs(m, members);
  trace.stop = StopReason::budget;
  for (std::uint64_t step = 0;; ++step) {
    if (meter.time_exceeded()) {
      trace.stop = StopReason::time_cap;
      break;
    }
    if (meter.remaining() < members) {
      // Spend what is left on members so the trace reaches the budget.
      try {
        for (int j = 0; j < members && !meter.exhausted(); ++j) {
          evaluator.evaluate(ensemble.col(j), PointRole::candidate);
        }
      } catch (const BudgetExhausted&) {
      }
      break;
    }
    bool finite = true;
    for (int j = 0; j < members; ++j) {
      outputs.col(j) = evaluator.evaluate(ensemble.col(j), PointRole::candidate);
      finite = finite && outputs.col(j).allFinite();
    }
    if (!finite) {
      trace.stop = StopReason::numerical_failure;
      trace.failure_message = "non-finite ensemble residual";
      break;
    }
    const Vector mean_x = ensemble.rowwise().mean();
    const Vector mean_g = outputs.rowwise().mean();
    const Matrix dev_x = ensemble.colwise() - mean_x;
    const Matrix dev_g = outputs.colwise() - mean_g;

    Matrix innovation(m, members);
    for (int j = 0; j < members; ++j) {
      rng::Stream stream(rng::derive_key({seed, kPerturbationTag, step, static_cast<std::uint64_t>(j)}));
      for (Index i = 0; i < m; ++i) innovation(i, j) = noise_std * stream.normal() - outputs(i, j);
    }

    Matrix gram = dev_g.transpose() * dev_g;
    gram.diagonal().array() += options.observation_noise * (members - 1) / options.step;
    Eigen::LLT<Matrix> llt(gram);
    const Matrix coeffs = llt.solve(dev_g.transpose() * innovation);
    if (llt.info() != Eigen::Success || !coeffs.allFinite()) {
      trace.stop = StopReason::numerical_failure;
      trace.failure_message = "EKI gain factorisation failed";
      break;
    }
    ensemble += dev_x * coeffs;
    trace.final_iterate = ensemble.rowwise().mean();
    ++trace.iterations;
    trace.iteration_ends.push_back(meter.used());
  }
  return trace;
}

}  // namespace rses
