#include <cmath>
#include <vector>

#include "rses/problems.hpp"
#include "rses/random.hpp"

namespace rses::problems {

void BrownianSpec::validate() const {
  if (paths < 1 || steps < 1) throw InvalidArgument("BrownianSpec: paths and steps must be >= 1");
  if (!(step_size > 0.0)) throw InvalidArgument("BrownianSpec: step size must be positive");
  if (std::abs(steps * step_size - 1.0) > 1e-12) {
    throw InvalidArgument("BrownianSpec: steps * step_size must equal the unit horizon");
  }
}

Eigen::Vector2d brownian_terminal_stats(const Eigen::Vector2d& theta, const BrownianSpec& spec,
                                        std::uint64_t stream_key) {
  if (!theta.allFinite()) throw InvalidArgument("brownian: parameters must be finite");
  const double drift_step = theta[0] * spec.step_size;
  const double diffusion_step = std::exp(theta[1]) * std::sqrt(spec.step_size);

  rng::Stream stream(stream_key);
  std::vector<double> terminal(static_cast<std::size_t>(spec.paths));
  double sum = 0.0;
  for (double& value : terminal) {
    double x = 0.0;
    for (int s = 0; s < spec.steps; ++s) x += drift_step + diffusion_step * stream.normal();
    value = x;
    sum += x;
  }
  const double mean = sum / spec.paths;
  double sq = 0.0;
  for (double value : terminal) sq += (value - mean) * (value - mean);
  return {mean, sq / spec.paths};
}

ResidualProblem make_brownian_problem(std::uint64_t seed, const BrownianSpec& spec) {
  spec.validate();
  ResidualProblem problem;
  problem.name = "brownian";
  problem.dim_params = 2;
  problem.dim_residual = 2;
  problem.stochastic = true;
  problem.evaluate = [spec, seed](const Vector& theta, std::uint64_t call_key) -> Vector {
    const Eigen::Vector2d stats =
        brownian_terminal_stats(Eigen::Vector2d(theta[0], theta[1]), spec, rng::derive_key({seed, call_key}));
    Vector r(2);
    r << stats[0] - spec.reference_mean, stats[1] - spec.reference_variance;
    return r;
  };
  problem.true_solution = Vector(Eigen::Vector2d(spec.drift_true, spec.log_sigma_true));
  problem.initial_guess = Vector(Eigen::Vector2d(0.0, std::log(0.2)));
  return problem;
}

}  // namespace rses::problems
