#include <memory>
#include <cmath>

#include "rses/problems.hpp"
#include "rses/random.hpp"

namespace rses::problems {

namespace {

constexpr std::uint64_t kDataTag = 0x3170'0001;
constexpr std::uint64_t kInitTag = 0x3170'0002;

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Read-only views of the parameter blocks.
struct MlpView {
  Eigen::Map<const Vector> w1, b1;
  Eigen::Map<const RowMajorMatrix> w2;
  Eigen::Map<const Vector> b2, w3;
  double b3;

  MlpView(const Vector& theta, MlpWidths w)
      : w1(theta.data(), w.hidden1),
        b1(theta.data() + w.hidden1, w.hidden1),
        w2(theta.data() + 2 * w.hidden1, w.hidden2, w.hidden1),
        b2(theta.data() + 2 * w.hidden1 + w.hidden1 * w.hidden2, w.hidden2),
        w3(theta.data() + 2 * w.hidden1 + w.hidden1 * w.hidden2 + w.hidden2, w.hidden2),
        b3(theta[mlp_parameter_count(w) - 1]) {}
};

void check_theta(const Vector& theta, MlpWidths widths) {
  if (widths.hidden1 < 1 || widths.hidden2 < 1) {
    throw InvalidArgument("mlp: widths must be positive");
  }
  if (theta.size() != mlp_parameter_count(widths)) {
    throw InvalidArgument("mlp: parameter vector has length " + std::to_string(theta.size()) +
                          ", expected " + std::to_string(mlp_parameter_count(widths)));
  }
}

Eigen::ArrayXXd softsign_array(const Eigen::ArrayXXd& s) { return s / (1.0 + s.square()).sqrt(); }

Eigen::ArrayXXd softsign_slope(const Eigen::ArrayXXd& s) {
  return (1.0 + s.square()).pow(-1.5);
}

struct ForwardPass {
  Eigen::ArrayXXd pre1, pre2;  // d x N pre-activations
  Matrix h1, h2;
  Eigen::RowVectorXd output;
};

ForwardPass forward_batch(const MlpView& net, const Eigen::RowVectorXd& inputs) {
  ForwardPass pass;
  pass.pre1 = ((net.w1 * inputs).colwise() + net.b1).array();
  pass.h1 = softsign_array(pass.pre1).matrix();
  pass.pre2 = ((net.w2 * pass.h1).colwise() + net.b2).array();
  pass.h2 = softsign_array(pass.pre2).matrix();
  pass.output = (net.w3.transpose() * pass.h2).array() + net.b3;
  return pass;
}

}  // namespace

void MlpSpec::validate() const {
  if (!mlp_widths_supported(widths)) {
    throw InvalidArgument("mlp: unsupported widths " + std::to_string(widths.hidden1) + "x" +
                          std::to_string(widths.hidden2) + " (expected 8x8, 16x16, 32x32 or 64x64)");
  }
  if (data_count < 1) throw InvalidArgument("mlp: data_count must be positive");
  if (!(noise_std >= 0.0) || !(tikhonov >= 0.0)) {
    throw InvalidArgument("mlp: noise and penalty must be nonnegative");
  }
  if (!(input_max > input_min)) throw InvalidArgument("mlp: empty input interval");
}

double softsign(double s) { return s / std::sqrt(1.0 + s * s); }

Index mlp_parameter_count(MlpWidths widths) {
  const Index d1 = widths.hidden1;
  const Index d2 = widths.hidden2;
  return 2 * d1 + d1 * d2 + 2 * d2 + 1;
}

bool mlp_widths_supported(MlpWidths widths) {
  for (const MlpWidths& w : kMlpWidths) {
    if (w == widths) return true;
  }
  return false;
}

double mlp_target_signal(double x) { return std::sin(3.0 * x) + 0.3 * x; }

MlpData make_mlp_data(const MlpSpec& spec) {
  spec.validate();
  MlpData data;
  data.inputs.resize(static_cast<std::size_t>(spec.data_count));
  data.targets.resize(data.inputs.size());
  rng::Stream noise(rng::derive_key({spec.data_seed, kDataTag}));
  const double spacing =
      spec.data_count > 1 ? (spec.input_max - spec.input_min) / (spec.data_count - 1) : 0.0;
  for (std::size_t p = 0; p < data.inputs.size(); ++p) {
    const double x = spec.input_min + spacing * static_cast<double>(p);
    data.inputs[p] = x;
    data.targets[p] = mlp_target_signal(x) + spec.noise_std * noise.normal();
  }
  return data;
}

double mlp_forward(const Vector& theta, double x, MlpWidths widths) {
  check_theta(theta, widths);
  const MlpView net(theta, widths);
  Vector h1(widths.hidden1);
  for (int j = 0; j < widths.hidden1; ++j) h1[j] = softsign(net.w1[j] * x + net.b1[j]);
  const Vector pre2 = net.w2 * h1 + net.b2;
  double y = net.b3;
  for (int i = 0; i < widths.hidden2; ++i) y += net.w3[i] * softsign(pre2[i]);
  return y;
}

Vector mlp_residual(const Vector& theta, const MlpData& data, MlpWidths widths, double tikhonov) {
  check_theta(theta, widths);
  const MlpView net(theta, widths);
  const Index count = static_cast<Index>(data.inputs.size());
  const Eigen::RowVectorXd inputs = Eigen::Map<const Eigen::RowVectorXd>(data.inputs.data(), count);
  const Eigen::RowVectorXd targets = Eigen::Map<const Eigen::RowVectorXd>(data.targets.data(), count);
  const ForwardPass pass = forward_batch(net, inputs);
  Vector r(count + theta.size());
  r.head(count) = (pass.output - targets).transpose();
  r.tail(theta.size()) = std::sqrt(0.5 * tikhonov) * theta;
  return r;
}

Vector mlp_gradient(const Vector& theta, const MlpData& data, MlpWidths widths, double tikhonov,
                    double data_weight) {
  check_theta(theta, widths);
  const MlpView net(theta, widths);
  const int d1 = widths.hidden1;
  const int d2 = widths.hidden2;
  const Index count = static_cast<Index>(data.inputs.size());
  const Eigen::RowVectorXd inputs = Eigen::Map<const Eigen::RowVectorXd>(data.inputs.data(), count);
  const Eigen::RowVectorXd targets = Eigen::Map<const Eigen::RowVectorXd>(data.targets.data(), count);
  const ForwardPass pass = forward_batch(net, inputs);

  // d/d yhat of sum (yhat - y)^2.
  const Eigen::RowVectorXd out_grad = 2.0 * data_weight * (pass.output - targets);
  const Matrix delta2 = ((net.w3 * out_grad).array() * softsign_slope(pass.pre2)).matrix();
  const Matrix delta1 = ((net.w2.transpose() * delta2).array() * softsign_slope(pass.pre1)).matrix();

  Vector grad(theta.size());
  Index at = 0;
  grad.segment(at, d1) = delta1 * inputs.transpose();
  at += d1;
  grad.segment(at, d1) = delta1.rowwise().sum();
  at += d1;
  Eigen::Map<RowMajorMatrix>(grad.data() + at, d2, d1) = delta2 * pass.h1.transpose();
  at += static_cast<Index>(d1) * d2;
  grad.segment(at, d2) = delta2.rowwise().sum();
  at += d2;
  grad.segment(at, d2) = pass.h2 * out_grad.transpose();
  at += d2;
  grad[at] = out_grad.sum();

  // d/d theta of (tikhonov / 2) ||theta||^2.
  grad += tikhonov * theta;
  return grad;
}

Vector mlp_initial_parameters(MlpWidths widths, std::uint64_t seed) {
  const int d1 = widths.hidden1;
  const int d2 = widths.hidden2;
  Vector theta = Vector::Zero(mlp_parameter_count(widths));
  rng::Stream stream(rng::derive_key({seed, kInitTag}));
  Index at = 0;
  for (int j = 0; j < d1; ++j) theta[at++] = stream.normal();  // fan_in 1
  at += d1;
  const double scale2 = 1.0 / std::sqrt(static_cast<double>(d1));
  for (int j = 0; j < d1 * d2; ++j) theta[at++] = scale2 * stream.normal();
  at += d2;
  const double scale3 = 1.0 / std::sqrt(static_cast<double>(d2));
  for (int j = 0; j < d2; ++j) theta[at++] = scale3 * stream.normal();
  return theta;
}

ResidualProblem make_mlp_problem(const MlpSpec& spec, std::uint64_t init_seed) {
  spec.validate();
  auto data = std::make_shared<const MlpData>(make_mlp_data(spec));
  const MlpWidths widths = spec.widths;
  const double tikhonov = spec.tikhonov;
  const Index n = mlp_parameter_count(widths);

  ResidualProblem problem;
  problem.name = "mlp" + std::to_string(widths.hidden1);
  problem.dim_params = n;
  problem.dim_residual = spec.data_count + n;
  problem.prescription_dim = spec.data_count;
  problem.probe_scale_hint = 0.01;
  problem.evaluate = [data, widths, tikhonov](const Vector& theta, std::uint64_t) -> Vector {
    return mlp_residual(theta, *data, widths, tikhonov);
  };
  problem.gradient = [data, widths, tikhonov](const Vector& theta) {
    ResidualAndGradient out;
    out.residual = mlp_residual(theta, *data, widths, tikhonov);
    out.gradient = 0.5 * mlp_gradient(theta, *data, widths, tikhonov);
    return out;
  };
  problem.initial_guess = mlp_initial_parameters(widths, init_seed);
  return problem;
}

ResidualProblem make_mlp_problem(MlpWidths widths, std::uint64_t data_seed,
                                 std::uint64_t init_seed) {
  MlpSpec spec;
  spec.widths = widths;
  spec.data_seed = data_seed;
  return make_mlp_problem(spec, init_seed);
}

}  // namespace rses::problems
