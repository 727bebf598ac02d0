#include <memory>
#include <cmath>

#include "rses/problems.hpp"
#include "rses/random.hpp"

namespace rses::problems {

namespace {
constexpr std::uint64_t kBlurTag = 0xDEC0'0001;
constexpr std::uint64_t kNoiseTag = 0xDEC0'0002;
constexpr std::uint64_t kWeightingTag = 0xDEC0'0003;
constexpr std::uint64_t kJitterTag = 0xDEC0'0004;
}  // namespace

Vector deconv_true_signal(Index n) {
  Vector x(n);
  for (Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i + 1);
    x[i] = std::exp(-(t - 40.0) * (t - 40.0) / (2.0 * 8.0 * 8.0)) -
           0.6 * std::exp(-(t - 90.0) * (t - 90.0) / (2.0 * 12.0 * 12.0));
  }
  return x;
}

double quantize(double value, double quantum) { return std::round(value / quantum) * quantum; }

DeconvSpec make_deconv_spec(Weighting kind, std::uint64_t seed, std::uint64_t trial) {
  const Index n = DeconvSpec::kSignalDim;
  const double entry_std = 1.0 / std::sqrt(static_cast<double>(n));
  DeconvSpec spec;
  spec.kind = kind;

  Matrix raw(n, n);
  rng::Stream blur_stream(rng::derive_key({seed, kBlurTag}));
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) raw(i, j) = entry_std * blur_stream.normal();
  }
  spec.blur = 0.5 * (raw + raw.transpose());
  spec.blur.diagonal().array() += 3.0;
  spec.blur /= 5.0;

  spec.true_signal = deconv_true_signal(n);
  const Vector clean = (spec.blur * spec.true_signal).array().tanh().matrix();
  spec.noise_std = 0.01 * clean.cwiseAbs().maxCoeff();
  rng::Stream noise_stream(rng::derive_key({seed, kNoiseTag}));
  spec.observations.resize(n);
  for (Index i = 0; i < n; ++i) {
    spec.observations[i] = quantize(clean[i], DeconvSpec::kQuantum) + spec.noise_std * noise_stream.normal();
  }

  spec.weighting = Matrix::Zero(3 * n, n);
  spec.weighting.topRows(n).setIdentity();
  if (kind == Weighting::perturbed) {
    rng::Stream mix_stream(rng::derive_key({seed, trial, kWeightingTag}));
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < 3 * n; ++i) spec.weighting(i, j) += entry_std * mix_stream.normal();
    }
  }
  return spec;
}

ResidualProblem make_deconv_problem(DeconvSpec spec, std::uint64_t stream_seed) {
  const Index n = spec.blur.rows();
  auto shared = std::make_shared<const DeconvSpec>(std::move(spec));
  ResidualProblem problem;
  problem.name = shared->kind == Weighting::intact ? "deconv-intact" : "deconv-perturbed";
  problem.dim_params = n;
  problem.dim_residual = 3 * n;
  problem.stochastic = true;
  problem.evaluate = [shared, stream_seed, n](const Vector& x, std::uint64_t call_key) -> Vector {
    rng::Stream jitter(rng::derive_key({stream_seed, call_key}));
    Vector misfit = (shared->blur * x).array().tanh().matrix();
    for (Index i = 0; i < n; ++i) {
      misfit[i] += jitter.uniform(-DeconvSpec::kJitterHalfwidth, DeconvSpec::kJitterHalfwidth) -
                   shared->observations[i];
    }
    if (shared->kind == Weighting::intact) {
      Vector r = Vector::Zero(3 * n);
      r.head(n) = misfit;
      return r;
    }
    return shared->weighting * misfit;
  };
  problem.true_solution = shared->true_signal;
  problem.initial_guess = Vector::Zero(n);
  return problem;
}

ResidualProblem make_deconv_problem(Weighting kind, std::uint64_t seed, std::uint64_t trial) {
  return make_deconv_problem(make_deconv_spec(kind, seed, trial),
                             rng::derive_key({seed, trial, kJitterTag}));
}

}  // namespace rses::problems
