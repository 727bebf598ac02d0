#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rses/evaluator.hpp"
#include "rses/meter.hpp"
#include "rses/problem.hpp"
#include "rses/trace.hpp"

namespace rses {

// Reference solvers for the benchmark comparisons. Every one of them charges
// the same EvaluationMeter and records a SolveTrace with the same conventions
// as rses_run.

struct GaussNewtonOptions {
  double fd_step = 1e-6;        // relative forward-difference step
  double damping = 1e-12;       // fixed Levenberg term mu
  double tolerance = 1e-12;     // stop once ||r|| < tolerance
};

struct EkiOptions {
  int ensemble_size = 0;              // 0 selects min(2n, 100)
  double step = 1.0;
  double initial_spread = 0.5;
  double observation_noise = 1e-4;    // Gamma = observation_noise * I

  static int default_ensemble_size(Index dim_params);
};

struct AdamOptions {
  double rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct XnesOptions {
  int population = 0;             // 0 selects 4 + floor(3 ln n)
  double initial_scale = 0.5;
  double mean_rate = 1.0;
  double scale_rate = 0.0;        // 0 selects 3 (3 + ln n) / (5 n sqrt(n))
  double shape_rate = 0.0;        // same default as scale_rate

  static int default_population(Index dim_params);
  static double default_rate(Index dim_params);
};

enum class BaselineKind { gauss_newton, eki, adam, xnes };

std::string_view to_string(BaselineKind kind);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::gauss_newton;
  GaussNewtonOptions gauss_newton;
  EkiOptions eki;
  AdamOptions adam;
  XnesOptions xnes;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Forward-difference Jacobian with per-coordinate step h_j = step * max(1, |x_j|).
/// Charges n evaluations when `base` (= F(x)) is supplied, n + 1 otherwise.
Matrix finite_difference_jacobian(TracedEvaluator& evaluator, const Vector& x, double step,
                                  const Vector* base = nullptr);

SolveTrace gauss_newton_run(const ResidualProblem& problem, const Vector& x0,
                            const GaussNewtonOptions& options, EvaluationMeter& meter);

/// Perturbed-observation ensemble Kalman inversion targeting F(x) = 0.
SolveTrace eki_run(const ResidualProblem& problem, const Vector& x0, const EkiOptions& options,
                   std::uint64_t seed, EvaluationMeter& meter);

/// Bias-corrected Adam moments; exposed for unit tests of single steps.
class AdamState {
 public:
  AdamState(Index dim, const AdamOptions& options);
  /// Returns the step to add to x for gradient g.
  Vector step(const Vector& gradient);
  std::int64_t steps_taken() const { return t_; }

 private:
  AdamOptions options_;
  Vector first_;
  Vector second_;
  std::int64_t t_ = 0;
};

/// Full-batch Adam on 0.5 ||F||^2. The meter counts gradient evaluations.
SolveTrace adam_run(const ResidualProblem& problem, const Vector& x0, const AdamOptions& options,
                    EvaluationMeter& meter);

/// Exponential natural evolution strategy on the fitness ||F||^2.
struct XnesObserver {
  virtual ~XnesObserver() = default;
  virtual void on_generation(const Vector& mean, double scale, const Matrix& shape) = 0;
};

SolveTrace xnes_run(const ResidualProblem& problem, const Vector& x0, const XnesOptions& options,
                    std::uint64_t seed, EvaluationMeter& meter, XnesObserver* observer = nullptr);

/// Dispatches on config.kind.
SolveTrace baseline_run(const ResidualProblem& problem, const Vector& x0,
                        const BaselineConfig& config, EvaluationMeter& meter);

/// Adapter for solvers implemented elsewhere: the solver proposes a batch of
/// points, receives their residual norms, and repeats until it proposes none.
class ExternalSolver {
 public:
  virtual ~ExternalSolver() = default;
  virtual std::string name() const = 0;
  virtual void start(const Vector& x0, double initial_residual_norm) = 0;
  virtual std::vector<Vector> propose() = 0;
  virtual void receive(std::span<const double> residual_norms) = 0;
};

SolveTrace external_run(const ResidualProblem& problem, const Vector& x0, ExternalSolver& solver,
                        EvaluationMeter& meter);

/// Compass search with step halving; the default plug-in behind `--solver external`.
class CompassSearch final : public ExternalSolver {
 public:
  explicit CompassSearch(double initial_step = 0.5, double min_step = 1e-12);
  std::string name() const override { return "compass"; }
  void start(const Vector& x0, double initial_residual_norm) override;
  std::vector<Vector> propose() override;
  void receive(std::span<const double> residual_norms) override;

 private:
  double step_;
  double min_step_;
  Vector center_;
  double center_norm_ = 0.0;
  std::vector<Vector> pending_;
};

}  // namespace rses
