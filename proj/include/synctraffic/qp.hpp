// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace synctraffic {

// Dense strictly convex QP with an identity-scaled Hessian:
//   minimize 1/2 * weight * |u|^2
//   subject to  A_eq u = b_eq,  A_in u <= b_in
// Solved by a dual-flavor active-set loop: start from the equality-constrained
// optimum, repeatedly activate the most violated inequality and drop active
// rows whose multipliers turn negative. Each working set is resolved through
// the normal equations of the stacked active rows.
struct QpProblem {
  double weight = 1.0;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd a_in;
  Eigen::VectorXd b_in;
};

enum class QpStatus { kOptimal, kInfeasible, kIterationLimit };

struct QpResult {
  QpStatus status = QpStatus::kInfeasible;
  Eigen::VectorXd u;
  Eigen::VectorXd eq_multipliers;
  Eigen::VectorXd in_multipliers;  // zero for inactive rows
  double kkt_residual = 0.0;
  int iterations = 0;
};

QpResult solve_qp(const QpProblem& problem, int max_iterations = 500);

}  // namespace synctraffic
