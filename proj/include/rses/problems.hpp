#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rses/problem.hpp"

namespace rses::problems {

// ---------------------------------------------------------------------------
// 2x2 linear system F(x) = A x - R with R = A (1, 1)^T.

struct LinearSystemSpec {
  Eigen::Matrix2d matrix_a;
  Eigen::Vector2d rhs;
  Eigen::Vector2d true_solution;

  static LinearSystemSpec standard();
};

ResidualProblem make_linear_problem();

// ---------------------------------------------------------------------------
// Drift/diffusion calibration from Euler-simulated terminal statistics.

struct BrownianSpec {
  double drift_true = 0.15;
  double log_sigma_true = -1.0498221244986778;  // ln 0.35
  int paths = 4096;
  int steps = 32;
  double step_size = 1.0 / 32.0;
  double reference_mean = 0.15;
  double reference_variance = 0.1225;  // 0.35^2

  void validate() const;
};

/// (empirical terminal mean, empirical terminal variance) for theta = (mu, ln sigma),
/// drawing all increments from streams keyed by `stream_key`.
Eigen::Vector2d brownian_terminal_stats(const Eigen::Vector2d& theta, const BrownianSpec& spec,
                                        std::uint64_t stream_key);

/// Residual (m_hat - m_ref, v_hat - v_ref); each call draws fresh increments
/// keyed by (seed, call_key). Default start (0, ln 0.2).
ResidualProblem make_brownian_problem(std::uint64_t seed, const BrownianSpec& spec = {});

// ---------------------------------------------------------------------------
// Two-hidden-layer softsign MLP regression with a Tikhonov block.
//
// Parameter layout: W1 (d1), b1 (d1), W2 (d2 x d1, row-major), b2 (d2), W3 (d2), b3.

struct MlpWidths {
  int hidden1 = 8;
  int hidden2 = 8;

  bool operator==(const MlpWidths&) const = default;
};

inline constexpr MlpWidths kMlpWidths[] = {{8, 8}, {16, 16}, {32, 32}, {64, 64}};

struct MlpSpec {
  MlpWidths widths;
  int data_count = 256;
  double noise_std = 0.05;
  double tikhonov = 1e-6;
  double input_min = -3.0;
  double input_max = 3.0;
  std::uint64_t data_seed = 0;

  void validate() const;
};

struct MlpData {
  std::vector<double> inputs;
  std::vector<double> targets;
};

double softsign(double s);
Index mlp_parameter_count(MlpWidths widths);
bool mlp_widths_supported(MlpWidths widths);

/// sin(3x) + 0.3x.
double mlp_target_signal(double x);
MlpData make_mlp_data(const MlpSpec& spec);

double mlp_forward(const Vector& theta, double x, MlpWidths widths);

/// Misfit rows followed by sqrt(tikhonov / 2) * theta.
Vector mlp_residual(const Vector& theta, const MlpData& data, MlpWidths widths, double tikhonov);

/// Gradient of ||F(theta)||^2. `data_weight` scales the misfit contribution
/// (1 for the real loss; 0 isolates the Tikhonov term).
Vector mlp_gradient(const Vector& theta, const MlpData& data, MlpWidths widths, double tikhonov,
                    double data_weight = 1.0);

/// Scaled-normal initialisation: weights ~ N(0, 1 / fan_in), biases 0.
Vector mlp_initial_parameters(MlpWidths widths, std::uint64_t seed);

/// loss = ||F||^2; gradient callback returns the gradient of 0.5 ||F||^2.
ResidualProblem make_mlp_problem(MlpWidths widths, std::uint64_t data_seed,
                                 std::uint64_t init_seed = 0);
ResidualProblem make_mlp_problem(const MlpSpec& spec, std::uint64_t init_seed);

// ---------------------------------------------------------------------------
// Saturating deconvolution with intact or perturbed residual weighting.

enum class Weighting { intact, perturbed };

struct DeconvSpec {
  static constexpr Index kSignalDim = 128;
  static constexpr double kJitterHalfwidth = 5e-4;
  static constexpr double kQuantum = 1e-3;

  Matrix blur;            // n x n, symmetric
  Vector true_signal;     // x_star
  Vector observations;    // y
  Matrix weighting;       // 3n x n
  double noise_std = 0.0;
  Weighting kind = Weighting::intact;
};

/// x_star(t) = exp(-(t-40)^2 / (2*8^2)) - 0.6 exp(-(t-90)^2 / (2*12^2)), t = 1..n.
Vector deconv_true_signal(Index n);

/// Rounds to the nearest multiple of `quantum`.
double quantize(double value, double quantum);

/// Blur, signal and noisy observations depend on `seed`; the perturbation of
/// the weighting depends on (seed, trial).
DeconvSpec make_deconv_spec(Weighting kind, std::uint64_t seed, std::uint64_t trial = 0);

/// F(x) = B_w (tanh(A x) + nu - y), nu ~ U(-5e-4, 5e-4) fresh per call.
ResidualProblem make_deconv_problem(Weighting kind, std::uint64_t seed, std::uint64_t trial = 0);
ResidualProblem make_deconv_problem(DeconvSpec spec, std::uint64_t stream_seed);

}  // namespace rses::problems
