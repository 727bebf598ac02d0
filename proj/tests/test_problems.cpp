#include <algorithm>
#include <cmath>

#include <catch_amalgamated.hpp>

#include "rses/problems.hpp"
#include "test_support.hpp"

using namespace rses;
using namespace rses::problems;
using Catch::Approx;

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double loss(const Vector& theta, const MlpData& data, MlpWidths w, double tikhonov) {
  return mlp_residual(theta, data, w, tikhonov).squaredNorm();
}

}  // namespace

TEST_CASE("linear system residuals") {
  const ResidualProblem lin = make_linear_problem();
  CHECK(lin.dim_params == 2);
  CHECK(lin.dim_residual == 2);
  CHECK(lin(Vector::Ones(2)).isZero(0.0));
  const Vector at0 = lin(Vector::Zero(2));
  CHECK(at0[0] == -1.0);
  CHECK(at0[1] == 0.0);
  const Vector at2 = lin(Vector::Constant(2, 2.0));
  CHECK(at2[0] == 1.0);
  CHECK(at2[1] == 0.0);
  const auto spec = LinearSystemSpec::standard();
  CHECK(spec.matrix_a(0, 0) == 101.0);
  CHECK(spec.matrix_a(0, 1) == -100.0);
  CHECK(spec.matrix_a(1, 0) == 1.0);
  CHECK(spec.matrix_a(1, 1) == -1.0);
  CHECK(spec.rhs == spec.matrix_a * spec.true_solution);
  CHECK(*lin.true_solution == Vector::Ones(2));
  CHECK(lin.initial_guess == Vector::Zero(2));
  CHECK_FALSE(lin.stochastic);
}

TEST_CASE("Brownian residual at the true parameters is small") {
  const ResidualProblem br = make_brownian_problem(0);
  CHECK(br.stochastic);
  CHECK(br.initial_guess[0] == 0.0);
  CHECK(br.initial_guess[1] == Approx(std::log(0.2)));
  const Vector theta = *br.true_solution;
  int within = 0;
  for (std::uint64_t call = 0; call < 200; ++call) within += br(theta, call).norm() <= 0.02;
  CHECK(within >= 196);
}

TEST_CASE("Brownian residual in the vanishing-diffusion limit") {
  const ResidualProblem br = make_brownian_problem(0);
  Vector theta(2);
  theta << 0.15, -20.0;
  const Vector r = br(theta, 0);
  CHECK(r[0] == Approx(0.0).margin(1e-6));
  CHECK(r[1] == Approx(-0.1225).margin(1e-6));
}

TEST_CASE("Brownian residuals are fresh per call and reproducible per key") {
  const ResidualProblem br = make_brownian_problem(3);
  const Vector theta = br.initial_guess;
  CHECK(br(theta, 0) != br(theta, 1));
  CHECK(br(theta, 5) == br(theta, 5));
  CHECK(make_brownian_problem(3)(theta, 5) == br(theta, 5));
  CHECK(make_brownian_problem(4)(theta, 5) != br(theta, 5));
  Vector bad(2);
  bad << std::nan(""), 0.0;
  CHECK_THROWS_AS(br(bad, 0), InvalidArgument);
}

TEST_CASE("Brownian sample statistics converge at rate 1 / sqrt(N)") {
  const Eigen::Vector2d theta(0.15, std::log(0.35));
  std::vector<double> rms_mean;
  for (int paths : {1 << 10, 1 << 12, 1 << 14}) {
    BrownianSpec spec;
    spec.paths = paths;
    double sq = 0.0, sqv = 0.0;
    const int reps = 40;
    for (int rep = 0; rep < reps; ++rep) {
      const Eigen::Vector2d stats = brownian_terminal_stats(theta, spec, rng::derive_key({9, static_cast<std::uint64_t>(rep)}));
      sq += std::pow(stats[0] - 0.15, 2);
      sqv += std::pow(stats[1] - 0.1225, 2);
    }
    const double rms = std::sqrt(sq / reps);
    const double rmsv = std::sqrt(sqv / reps);
    // Standard errors: 0.35 / sqrt(N) for the mean, sqrt(2) * 0.1225 / sqrt(N) for the variance.
    CHECK(rms == Approx(0.35 / std::sqrt(paths)).epsilon(0.35));
    CHECK(rmsv == Approx(std::sqrt(2.0) * 0.1225 / std::sqrt(paths)).epsilon(0.35));
    rms_mean.push_back(rms);
  }
  CHECK(rms_mean[0] / rms_mean[2] == Approx(4.0).epsilon(0.4));
}

TEST_CASE("Brownian spec validation") {
  BrownianSpec spec;
  spec.steps = 16;
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  spec = BrownianSpec{};
  spec.paths = 0;
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
}

TEST_CASE("MLP parameter counts") {
  CHECK(mlp_parameter_count({8, 8}) == 97);
  CHECK(mlp_parameter_count({16, 16}) == 321);
  CHECK(mlp_parameter_count({32, 32}) == 1153);
  CHECK(mlp_parameter_count({64, 64}) == 4353);
  CHECK_THROWS_AS(make_mlp_problem(MlpWidths{8, 16}, 0), InvalidArgument);
}

TEST_CASE("softsign activation") {
  CHECK(softsign(0.0) == 0.0);
  CHECK(softsign(1.0) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  for (double s : {-1e6, -3.0, 0.5, 40.0}) CHECK(std::abs(softsign(s)) < 1.0);
  CHECK(softsign(1e8) <= 1.0);  // 1 - 5e-17 rounds to 1 in double precision
}

TEST_CASE("MLP forward pass") {
  const MlpWidths w{8, 8};
  const Vector zero = Vector::Zero(mlp_parameter_count(w));
  for (double x : {-3.0, 0.0, 2.5}) CHECK(mlp_forward(zero, x, w) == 0.0);

  // One unit per layer: W1 = W2 = W3 = 1, biases 0.
  const MlpWidths unit{1, 1};
  Vector theta(mlp_parameter_count(unit));
  theta << 1.0, 0.0, 1.0, 0.0, 1.0, 0.0;
  CHECK(mlp_forward(theta, 1.0, unit) == Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));

  rng::Stream s(4);
  const Vector random = test::random_vector(s, mlp_parameter_count(w), 2.0);
  const Index w3_at = 2 * 8 + 64 + 8;
  const double w3_l1 = random.segment(w3_at, 8).cwiseAbs().sum();
  const double b3 = random[w3_at + 8];
  for (double x = -5.0; x <= 5.0; x += 0.25) {
    CHECK(std::abs(mlp_forward(random, x, w) - b3) <= w3_l1);
  }
  CHECK_THROWS_AS(mlp_forward(Vector::Zero(5), 0.0, w), InvalidArgument);
}

TEST_CASE("MLP residual layout") {
  const MlpSpec spec;
  const MlpData data = make_mlp_data(spec);
  REQUIRE(data.inputs.size() == 256);
  CHECK(data.inputs.front() == -3.0);
  CHECK(data.inputs.back() == Approx(3.0).epsilon(1e-15));
  const Index n = mlp_parameter_count(spec.widths);
  const Vector r0 = mlp_residual(Vector::Zero(n), data, spec.widths, spec.tikhonov);
  REQUIRE(r0.size() == 256 + n);
  for (int i = 0; i < 256; ++i) CHECK(r0[i] == -data.targets[i]);
  CHECK(r0.tail(n).isZero(0.0));

  const Vector ones = Vector::Ones(n);
  const Vector r1 = mlp_residual(ones, data, spec.widths, spec.tikhonov);
  CHECK(r1.tail(n).isConstant(std::sqrt(spec.tikhonov / 2.0), 1e-15));

  const ResidualProblem prob = make_mlp_problem(spec, 0);
  CHECK(prob.dim_residual == 256 + n);
  CHECK(prob.dim_params == n);
  CHECK(prob.prescription_dim == 256);
  CHECK(prob.has_gradient());
  CHECK_FALSE(prob.true_solution.has_value());
}

TEST_CASE("MLP noise is Gaussian with the stated scale") {
  const MlpData data = make_mlp_data(MlpSpec{});
  std::vector<double> z;
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    z.push_back((data.targets[i] - mlp_target_signal(data.inputs[i])) / 0.05);
  }
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = normal_cdf(z[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  CHECK(d < 1.63 / std::sqrt(n));  // Kolmogorov-Smirnov, 1% level
}

TEST_CASE("MLP gradient matches central differences") {
  const MlpSpec base;
  const MlpData data = make_mlp_data(base);
  rng::Stream s(rng::derive_key({21}));
  for (const MlpWidths& w : kMlpWidths) {
    const Index n = mlp_parameter_count(w);
    for (int point = 0; point < 20; ++point) {
      const Vector theta = mlp_initial_parameters(w, 100 + point) + test::random_vector(s, n, 0.1);
      const Vector g = mlp_gradient(theta, data, w, base.tikhonov);
      // Central differences along a handful of random directions and coordinates.
      for (int probe = 0; probe < 4; ++probe) {
        Vector dir = Vector::Zero(n);
        if (probe < 2) {
          dir[static_cast<Index>(s.next_u64() % static_cast<std::uint64_t>(n))] = 1.0;
        } else {
          dir = test::random_vector(s, n).normalized();
        }
        const double h = 1e-5;
        const double fd = (loss(theta + h * dir, data, w, base.tikhonov) -
                           loss(theta - h * dir, data, w, base.tikhonov)) / (2 * h);
        const double an = g.dot(dir);
        CHECK(std::abs(fd - an) <= 1e-5 * std::max(std::abs(an), g.norm() * 1e-3));
      }
    }
  }
}

TEST_CASE("MLP gradient special cases") {
  const MlpWidths w{16, 16};
  const Index n = mlp_parameter_count(w);
  MlpData zeros = make_mlp_data(MlpSpec{});
  std::fill(zeros.targets.begin(), zeros.targets.end(), 0.0);
  CHECK(mlp_gradient(Vector::Zero(n), zeros, w, 1e-6).isZero(0.0));

  // The penalty rows sqrt(lambda / 2) theta contribute lambda theta to the gradient of ||F||^2.
  rng::Stream s(12);
  const Vector theta = test::random_vector(s, n);
  const double lambda = 0.3;
  const Vector g = mlp_gradient(theta, zeros, w, lambda, 0.0);
  CHECK((g - lambda * theta).norm() <= 1e-14 * theta.norm());
  const double h = 1e-6;
  const Vector e = Vector::Unit(n, 3);
  const double penalty_fd = (std::pow(std::sqrt(lambda / 2) * (theta + h * e).norm(), 2) -
                             std::pow(std::sqrt(lambda / 2) * (theta - h * e).norm(), 2)) / (2 * h);
  CHECK(g[3] == Approx(penalty_fd).epsilon(1e-6));
}

TEST_CASE("MLP problem gradient is half the loss gradient") {
  const ResidualProblem prob = make_mlp_problem(MlpWidths{8, 8}, 0, 0);
  const MlpData data = make_mlp_data(MlpSpec{});
  const Vector theta = prob.initial_guess;
  const ResidualAndGradient rg = prob.gradient(theta);
  CHECK((rg.gradient - 0.5 * mlp_gradient(theta, data, {8, 8}, 1e-6)).norm() < 1e-14);
  CHECK((rg.residual - prob(theta)).norm() == 0.0);
}

TEST_CASE("MLP initialisation scales") {
  const MlpWidths w{64, 64};
  const Vector theta = mlp_initial_parameters(w, 1);
  const Vector w2 = theta.segment(128, 64 * 64);
  const double sd = std::sqrt(w2.squaredNorm() / w2.size());
  CHECK(sd == Approx(1.0 / 8.0).epsilon(0.05));
  CHECK(theta.segment(64, 64).isZero(0.0));
  CHECK(mlp_initial_parameters(w, 1) == theta);
  CHECK(mlp_initial_parameters(w, 2) != theta);
}

TEST_CASE("deconvolution structure") {
  const DeconvSpec spec = make_deconv_spec(Weighting::intact, 0);
  const Index n = DeconvSpec::kSignalDim;
  CHECK(spec.blur.rows() == n);
  CHECK((spec.blur - spec.blur.transpose()).norm() == 0.0);
  CHECK(spec.weighting.rows() == 3 * n);
  CHECK(spec.weighting.topRows(n) == Matrix::Identity(n, n));
  CHECK(spec.weighting.bottomRows(2 * n).isZero(0.0));

  const Vector tanh_ax = (spec.blur * spec.true_signal).array().tanh();
  CHECK(spec.noise_std == Approx(0.01 * tanh_ax.cwiseAbs().maxCoeff()).epsilon(1e-15));

  const ResidualProblem prob = make_deconv_problem(Weighting::intact, 0);
  CHECK(prob.dim_params == 128);
  CHECK(prob.dim_residual == 384);
  CHECK(prob.stochastic);
  rng::Stream s(1);
  for (int rep = 0; rep < 5; ++rep) {
    const Vector r = prob(test::random_vector(s, n), rep);
    CHECK(r.tail(2 * n).isZero(0.0));
  }

  // At x_star every entry is bounded by the drawn noise plus jitter and rounding.
  const Vector r_star = prob(spec.true_signal, 7);
  for (Index i = 0; i < n; ++i) {
    const double eta = spec.observations[i] - quantize(tanh_ax[i], DeconvSpec::kQuantum);
    CHECK(std::abs(r_star[i]) <= std::abs(eta) + 1.5e-3);
  }
}

TEST_CASE("deconvolution true signal and quantisation") {
  const Vector x = deconv_true_signal(128);
  CHECK(x[39] == Approx(1.0 - 0.6 * std::exp(-2500.0 / 288.0)).epsilon(1e-14));  // t = 40
  CHECK(x[89] == Approx(-0.6 + std::exp(-2500.0 / 128.0)).epsilon(1e-14));  // t = 90
  rng::Stream s(2);
  for (int i = 0; i < 1000; ++i) {
    const double z = s.uniform(-2.0, 2.0);
    CHECK(std::abs(quantize(z, 1e-3) - z) <= 5e-4 + 1e-16);
  }
  CHECK(quantize(0.0004, 1e-3) == 0.0);
  CHECK(quantize(0.0006, 1e-3) == Approx(1e-3));
}

TEST_CASE("perturbed weighting is fixed per trial") {
  const DeconvSpec a = make_deconv_spec(Weighting::perturbed, 0, 0);
  const DeconvSpec b = make_deconv_spec(Weighting::perturbed, 0, 1);
  const DeconvSpec intact = make_deconv_spec(Weighting::intact, 0, 0);
  CHECK(a.weighting != b.weighting);
  CHECK(a.blur == b.blur);
  CHECK(a.observations == b.observations);
  CHECK(a.weighting == make_deconv_spec(Weighting::perturbed, 0, 0).weighting);
  const Matrix delta = a.weighting - intact.weighting;
  const double sd = std::sqrt(delta.squaredNorm() / delta.size());
  CHECK(sd == Approx(1.0 / std::sqrt(128.0)).epsilon(0.02));
}

TEST_CASE("deconvolution jitter is fresh per call and keyed") {
  const ResidualProblem prob = make_deconv_problem(Weighting::perturbed, 5, 2);
  const Vector x = Vector::Zero(128);
  CHECK(prob(x, 0) != prob(x, 1));
  CHECK(prob(x, 3) == prob(x, 3));
  const Vector diff = prob(x, 0) - prob(x, 1);
  // Jitter is bounded, so two calls differ by at most ||B_w|| * 2 * 5e-4 * sqrt(n).
  const DeconvSpec spec = make_deconv_spec(Weighting::perturbed, 5, 2);
  const double op_norm = Eigen::JacobiSVD<Matrix>(spec.weighting).singularValues()[0];
  CHECK(diff.norm() <= op_norm * 1e-3 * std::sqrt(128.0));
}

TEST_CASE("problems validate their input") {
  const ResidualProblem lin = make_linear_problem();
  CHECK_THROWS_AS(lin(Vector::Zero(3)), InvalidArgument);
  CHECK_NOTHROW(validate_problem(lin));
  ResidualProblem broken = lin;
  broken.dim_residual = 3;
  CHECK_THROWS_AS(broken(Vector::Zero(2)), InvalidArgument);
}
