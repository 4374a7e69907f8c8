#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "elop/errors.hpp"

namespace elop {

// Coordinates listed in `indices` must sum to `target`.
struct SumConstraint {
  std::vector<int> indices;
  double target = 0.0;
};

// minimize 0.5 * beta' q beta + c' beta
// subject to beta_i >= 0 for i in nonneg_indices
//            sum_{i in sum_constraint.indices} beta_i = sum_constraint.target
struct QpProblem {
  Eigen::MatrixXd q;
  Eigen::VectorXd c;
  std::vector<int> nonneg_indices;
  std::optional<SumConstraint> sum_constraint;
};

struct QpSolution {
  Eigen::VectorXd beta;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  std::vector<int> active_set;  // nonneg indices pinned at zero
  double ridge_added = 0.0;     // diagonal perturbation applied to singular q
  bool converged = false;
};

inline constexpr double kQpDefaultTol = 1e-9;

// Primal active-set solver for bounds plus the optional sum constraint
// (handled by null-space elimination). Deterministic: ties in the working-set
// updates break toward the lowest index. On hitting max_iter the best
// iterate is returned with converged = false.
QpSolution solve(const QpProblem& p, double tol = kQpDefaultTol, int max_iter = 0);

// Max-norm KKT residual of beta for problem p: projected-gradient residual on
// bound coordinates, plain gradient on free ones, feasibility of the sum
// constraint. The equality multiplier is chosen to minimize the residual.
double check_kkt(const QpProblem& p, const Eigen::VectorXd& beta);

}  // namespace elop
