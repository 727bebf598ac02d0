#include <limits>
#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "rses/baselines.hpp"
#include "rses/random.hpp"

namespace rses {

namespace {

constexpr std::uint64_t kSampleTag = 0x58E5'0001;

// exp of a symmetric matrix via its eigendecomposition.
Matrix symmetric_expm(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  return eig.eigenvectors() * eig.eigenvalues().array().exp().matrix().asDiagonal() *
         eig.eigenvectors().transpose();
}

// Rank-based utilities, best first, summing to zero.
Vector utility_weights(int population) {
  Vector u(population);
  const double top = std::log(population / 2.0 + 1.0);
  for (int i = 0; i < population; ++i) u[i] = std::max(0.0, top - std::log(i + 1.0));
  u /= u.sum();
  u.array() -= 1.0 / population;
  return u;
}

}  // namespace

int XnesOptions::default_population(Index dim_params) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dim_params))));
}

double XnesOptions::default_rate(Index dim_params) {
  const double d = static_cast<double>(dim_params);
  return 3.0 * (3.0 + std::log(d)) / (5.0 * d * std::sqrt(d));
}

SolveTrace xnes_run(const ResidualProblem& problem, const Vector& x0, const XnesOptions& options,
                    std::uint64_t seed, EvaluationMeter& meter, XnesObserver* observer) {
  validate_problem(problem);
  if (x0.size() != problem.dim_params) throw InvalidArgument("xnes_run: bad x0 length");
  const Index n = problem.dim_params;
  const int population =
      options.population > 0 ? options.population : XnesOptions::default_population(n);
  if (population < 2) throw InvalidArgument("xnes_run: population must be at least 2");
  const double scale_rate =
      options.scale_rate > 0.0 ? options.scale_rate : XnesOptions::default_rate(n);
  const double shape_rate =
      options.shape_rate > 0.0 ? options.shape_rate : XnesOptions::default_rate(n);
  const Vector utilities = utility_weights(population);

  SolveTrace trace;
  trace.solver = "xnes";
  TracedEvaluator evaluator(problem, meter, trace);

  Vector mean = x0;
  double scale = options.initial_scale;
  Matrix shape = Matrix::Identity(n, n);
  trace.final_iterate = mean;

  Matrix z(n, population);
  Matrix samples(n, population);
  std::vector<double> fitness(static_cast<std::size_t>(population));
  std::vector<int> order(static_cast<std::size_t>(population));
  trace.stop = StopReason::budget;
  for (std::uint64_t generation = 0;; ++generation) {
    if (meter.time_exceeded()) {
      trace.stop = StopReason::time_cap;
      break;
    }
    if (meter.remaining() < population) break;
    for (int i = 0; i < population; ++i) {
      rng::Stream stream(rng::derive_key({seed, kSampleTag, generation, static_cast<std::uint64_t>(i)}));
      stream.fill_normal(std::span<double>(z.col(i).data(), static_cast<std::size_t>(n)));
      samples.col(i) = mean + scale * shape * z.col(i);
      const Vector r = evaluator.evaluate(samples.col(i), PointRole::candidate);
      const double f = r.squaredNorm();
      fitness[static_cast<std::size_t>(i)] = std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fitness[static_cast<std::size_t>(a)] < fitness[static_cast<std::size_t>(b)]; });

    Vector grad_mean = Vector::Zero(n);
    Matrix grad_shape = Matrix::Zero(n, n);
    for (int rank = 0; rank < population; ++rank) {
      const auto zi = z.col(order[static_cast<std::size_t>(rank)]);
      grad_mean += utilities[rank] * zi;
      grad_shape += utilities[rank] * (zi * zi.transpose() - Matrix::Identity(n, n));
    }
    const double grad_scale = grad_shape.trace() / static_cast<double>(n);
    grad_shape.diagonal().array() -= grad_scale;

    mean += options.mean_rate * scale * shape * grad_mean;
    scale *= std::exp(0.5 * scale_rate * grad_scale);
    shape = shape * symmetric_expm(0.5 * shape_rate * grad_shape);
    trace.final_iterate = mean;
    ++trace.iterations;
    trace.iteration_ends.push_back(meter.used());
    if (observer) observer->on_generation(mean, scale, shape);
    if (!mean.allFinite() || !std::isfinite(scale) || !shape.allFinite()) {
      trace.stop = StopReason::numerical_failure;
      trace.failure_message = "xNES search distribution became non-finite";
      break;
    }
  }
  return trace;
}

}  // namespace rses
