#include "rses/problems.hpp"

namespace rses::problems {

LinearSystemSpec LinearSystemSpec::standard() {
  LinearSystemSpec spec;
  spec.matrix_a << 101.0, -100.0, 1.0, -1.0;
  spec.true_solution << 1.0, 1.0;
  spec.rhs = spec.matrix_a * spec.true_solution;
  return spec;
}

ResidualProblem make_linear_problem() {
  const LinearSystemSpec spec = LinearSystemSpec::standard();
  ResidualProblem problem;
  problem.name = "linear";
  problem.dim_params = 2;
  problem.dim_residual = 2;
  problem.evaluate = [a = spec.matrix_a, rhs = spec.rhs](const Vector& x, std::uint64_t) -> Vector {
    return a * x - rhs;
  };
  problem.gradient = [a = spec.matrix_a, rhs = spec.rhs](const Vector& x) {
    ResidualAndGradient out;
    out.residual = a * x - rhs;
    out.gradient = a.transpose() * out.residual;
    return out;
  };
  problem.true_solution = Vector(spec.true_solution);
  problem.initial_guess = Vector::Zero(2);
  return problem;
}

}  // namespace rses::problems
