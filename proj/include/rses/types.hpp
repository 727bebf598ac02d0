#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace rses {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Raised for malformed inputs: non-finite values, mismatched dimensions, bad knobs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A linear solve or update produced no usable result.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The evaluation meter refused a charge. Traces recorded so far stay valid.
class BudgetExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A solver needs something the problem does not provide (e.g. a gradient).
class UnsupportedProblem : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace rses
