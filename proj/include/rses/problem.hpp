#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "rses/types.hpp"

namespace rses {

struct ResidualAndGradient {
  Vector residual;
  /// Gradient of 0.5 * ||F(x)||^2.
  Vector gradient;
};

/// Residual callback. `call_key` identifies the evaluation; stochastic problems
/// derive their per-call randomness from it, deterministic ones ignore it.
using ResidualFn = std::function<Vector(const Vector& x, std::uint64_t call_key)>;
using GradientFn = std::function<ResidualAndGradient(const Vector& x)>;

/// A residual map F: R^n -> R^m plus the metadata solvers and the harness need.
struct ResidualProblem {
  std::string name;
  Index dim_params = 0;
  Index dim_residual = 0;
  ResidualFn evaluate;
  std::optional<Vector> true_solution;
  /// Empty unless the problem is differentiable.
  GradientFn gradient;
  Vector initial_guess;
  bool stochastic = false;

  /// Residual dimension used by the probe-count prescription when it differs
  /// from dim_residual (penalty rows that add no problem complexity).
  std::optional<Index> prescription_dim;
  /// Preferred probe scale when the problem is not unit-scaled.
  std::optional<double> probe_scale_hint;

  bool has_gradient() const { return static_cast<bool>(gradient); }

  /// Evaluates F and enforces the output contract (length m, finite for finite x).
  Vector operator()(const Vector& x, std::uint64_t call_key = 0) const;
};

/// Throws InvalidArgument when the problem's metadata is inconsistent.
void validate_problem(const ResidualProblem& problem);

}  // namespace rses
