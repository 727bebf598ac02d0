#include <cmath>

#include <catch_amalgamated.hpp>

#include "rses/problems.hpp"
#include "rses/solver.hpp"
#include "test_support.hpp"

using namespace rses;

namespace {

int uniform_int(rng::Stream& s, int lo, int hi) {
  return lo + static_cast<int>(s.next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
}

double log_uniform(rng::Stream& s, double lo, double hi) {
  return std::exp(s.uniform(std::log(lo), std::log(hi)));
}

}  // namespace

TEST_CASE("one step on an affine map never raises the residual energy") {
  rng::Stream s(rng::derive_key({31, 1}));
  int strict_cases = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int m = uniform_int(s, 1, 20);
    const int n = uniform_int(s, 1, 20);
    const int k = uniform_int(s, 1, 15);
    const Matrix a = test::random_matrix(s, m, n);
    const Vector b = test::random_vector(s, m);
    const ResidualProblem prob = test::affine_problem(a, b, false);
    const Vector x = test::random_vector(s, n);
    const Matrix p = test::random_matrix(s, n, k, log_uniform(s, 1e-3, 1.0));
    const double lambda = log_uniform(s, 1e-10, 10.0);

    const Vector r = prob(x);
    const Matrix bmat = a * p;
    const RidgeSolution sol = ridge_weights(bmat, r, lambda);
    const Vector r_next = prob(apply_update(x, p, sol.weights));
    const double before = 0.5 * r.squaredNorm();
    const double after = 0.5 * r_next.squaredNorm();
    REQUIRE(after <= before + 1e-12);
    if ((p.transpose() * a.transpose() * r).norm() > 1e-6) {
      ++strict_cases;
      REQUIRE(after < before);
    }
  }
  CHECK(strict_cases > 900);
}

TEST_CASE("ridge weights obey ||w|| <= ||r|| / (2 sqrt(lambda))") {
  rng::Stream s(rng::derive_key({32, 2}));
  int violations = 0;
  double worst_ratio = 0.0;
  for (int rep = 0; rep < 10000; ++rep) {
    const int m = uniform_int(s, 1, 50);
    const int k = uniform_int(s, 1, 40);
    const Matrix bmat = test::random_matrix(s, m, k, log_uniform(s, 1e-4, 1e2));
    const Vector r = test::random_vector(s, m, log_uniform(s, 1e-4, 1e2));
    const double lambda = log_uniform(s, 1e-10, 1e2);
    const RidgeSolution sol = ridge_weights(bmat, r, lambda);
    const double bound = r.norm() / (2.0 * std::sqrt(lambda));
    const double ratio = sol.weights.norm() / bound;
    worst_ratio = std::max(worst_ratio, ratio);
    violations += ratio > 1.0 + 1e-10;
  }
  CHECK(violations == 0);
  CHECK(worst_ratio <= 1.0 + 1e-10);
}

TEST_CASE("scheduled ridge bounds ||w|| by 1 / (2 sqrt(beta))") {
  rng::Stream s(rng::derive_key({33}));
  for (int rep = 0; rep < 2000; ++rep) {
    const int m = uniform_int(s, 1, 30);
    const int k = uniform_int(s, 1, 20);
    const Matrix bmat = test::random_matrix(s, m, k, log_uniform(s, 1e-3, 10.0));
    const Vector r = test::random_vector(s, m, log_uniform(s, 1e-2, 10.0));
    const double beta = log_uniform(s, 1e-6, 1.0);
    const double lambda = lambda_schedule(beta, r.norm(), 1e-300);
    const RidgeSolution sol = ridge_weights(bmat, r, lambda);
    REQUIRE(sol.weights.norm() <= 1.0 / (2.0 * std::sqrt(beta)) * (1.0 + 1e-10));
  }
}

TEST_CASE("ridge bound is attained when a singular value equals sqrt(lambda)") {
  rng::Stream s(rng::derive_key({34}));
  for (int rep = 0; rep < 100; ++rep) {
    const int m = uniform_int(s, 2, 30);
    const int k = uniform_int(s, 1, std::min(m, 20));
    const double lambda = log_uniform(s, 1e-6, 1e2);
    Eigen::HouseholderQR<Matrix> qu(test::random_matrix(s, m, m));
    Eigen::HouseholderQR<Matrix> qv(test::random_matrix(s, k, k));
    const Matrix u = qu.householderQ() * Matrix::Identity(m, k);
    const Matrix v = qv.householderQ() * Matrix::Identity(k, k);
    Vector sig = test::random_vector(s, k).cwiseAbs() * 3.0;
    sig[0] = std::sqrt(lambda);
    const Matrix bmat = u * sig.asDiagonal() * v.transpose();
    const Vector r = u.col(0) * log_uniform(s, 0.1, 10.0);
    const RidgeSolution sol = ridge_weights(bmat, r, lambda);
    const double bound = r.norm() / (2.0 * std::sqrt(lambda));
    CHECK(std::abs(sol.weights.norm() - bound) <= 1e-8 * bound);
  }
}

TEST_CASE("identical seeds give bit-identical traces") {
  const ResidualProblem mlp = problems::make_mlp_problem(problems::MlpWidths{8, 8}, 3, 4);
  const SolverConfig cfg = SolverConfig::prescribed(mlp, 2000, 77);
  auto run = [&] {
    EvaluationMeter meter(2000, 30.0, false);
    return rses_run(mlp, mlp.initial_guess, cfg, meter);
  };
  const SolveTrace a = run();
  const SolveTrace b = run();
  REQUIRE(a.evaluations.size() == b.evaluations.size());
  for (std::size_t i = 0; i < a.evaluations.size(); ++i) {
    CHECK(a.evaluations[i].residual_norm == b.evaluations[i].residual_norm);
    CHECK(a.evaluations[i].wall_time_s == 0.0);
  }
  CHECK(a.final_iterate == b.final_iterate);
  CHECK(a.best_iterate == b.best_iterate);

  const SolverConfig other = SolverConfig::prescribed(mlp, 2000, 78);
  EvaluationMeter meter(2000, 30.0, false);
  CHECK(rses_run(mlp, mlp.initial_guess, other, meter).final_iterate != a.final_iterate);
}

TEST_CASE("every trace spends 1 + iterations * (k + 1) evaluations") {
  rng::Stream s(rng::derive_key({35}));
  const ResidualProblem deconv = problems::make_deconv_problem(problems::Weighting::intact, 0);
  for (int rep = 0; rep < 40; ++rep) {
    const int m = uniform_int(s, 1, 12);
    const int n = uniform_int(s, 1, 8);
    const bool use_deconv = rep % 8 == 0;
    const ResidualProblem affine =
        test::affine_problem(test::random_matrix(s, m, n), test::random_vector(s, m), false);
    const ResidualProblem& prob = use_deconv ? deconv : affine;
    SolverConfig cfg;
    cfg.probe_count = uniform_int(s, 1, 12);
    cfg.max_iterations = uniform_int(s, 1, 500);
    cfg.tolerance = 0.0;
    cfg.seed = s.next_u64();
    const std::int64_t budget = uniform_int(s, 1, 400);
    EvaluationMeter meter(budget);
    const SolveTrace trace = rses_run(prob, Vector::Zero(prob.dim_params), cfg, meter);
    const std::int64_t k1 = cfg.probe_count + 1;
    CHECK(trace.total_evaluations() == 1 + trace.iterations * k1);
    CHECK(trace.total_evaluations() <= budget);
    CHECK(static_cast<std::int64_t>(trace.evaluations.size()) == trace.total_evaluations());
    CHECK(trace.total_evaluations() == meter.used());
    REQUIRE(static_cast<std::int64_t>(trace.iteration_ends.size()) == trace.iterations);
    for (std::size_t t = 0; t < trace.iteration_ends.size(); ++t) {
      CHECK(trace.iteration_ends[t] == 1 + static_cast<std::int64_t>(t + 1) * k1);
    }
    if (trace.stop == StopReason::budget) CHECK(budget - meter.used() < k1);
  }
}

TEST_CASE("each step lies in the span of its probes") {
  const ResidualProblem deconv = problems::make_deconv_problem(problems::Weighting::perturbed, 2);
  EvaluationMeter meter(10000);
  SolveTrace trace;
  TracedEvaluator ev(deconv, meter, trace);
  Vector x = Vector::Zero(deconv.dim_params);
  Vector r = ev.evaluate(x, PointRole::candidate);
  for (std::uint64_t t = 0; t < 20; ++t) {
    const Matrix p = draw_probes(deconv.dim_params, 12, 0.9, {5, t});
    const ProbeBatch batch = collect_differences(ev, x, r, p);
    const RidgeSolution sol = ridge_weights(batch.differences, r, lambda_schedule(0.2, r.norm(), 1e-8));
    const Vector next = apply_update(x, p, sol.weights);
    Matrix augmented(p.rows(), p.cols() + 1);
    augmented << p, next - x;
    CHECK(test::numerical_rank(augmented) == test::numerical_rank(p));
    x = next;
    r = ev.evaluate(x, PointRole::candidate);
  }
}
