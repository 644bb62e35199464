// SPDX-License-Identifier: Apache-2.0
#include "synctraffic/qp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace synctraffic {

namespace {
constexpr double kFeasTol = 1e-9;
constexpr double kMultTol = 1e-10;
constexpr double kConsistencyTol = 1e-7;
}  // namespace

QpResult solve_qp(const QpProblem& problem, int max_iterations) {
  const Eigen::Index n = problem.a_eq.cols() > 0 ? problem.a_eq.cols() : problem.a_in.cols();
  const Eigen::Index n_eq = problem.a_eq.rows();
  const Eigen::Index n_in = problem.a_in.rows();
  const double w = problem.weight;

  QpResult result;
  result.u = Eigen::VectorXd::Zero(n);
  result.eq_multipliers = Eigen::VectorXd::Zero(n_eq);
  result.in_multipliers = Eigen::VectorXd::Zero(n_in);

  std::vector<Eigen::Index> active;  // inequality rows in the working set
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd lambda;            // stacked (eq, active-in) multipliers

  auto resolve = [&](bool& consistent) {
    const Eigen::Index rows = n_eq + static_cast<Eigen::Index>(active.size());
    if (rows == 0) {
      u.setZero();
      lambda.resize(0);
      consistent = true;
      return;
    }
    Eigen::MatrixXd c(rows, n);
    Eigen::VectorXd d(rows);
    c.topRows(n_eq) = problem.a_eq;
    d.head(n_eq) = problem.b_eq;
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(active.size()); ++k) {
      c.row(n_eq + k) = problem.a_in.row(active[k]);
      d(n_eq + k) = problem.b_in(active[k]);
    }
    // Minimum-energy point on the active affine subspace: u = -(1/w) c^T y,
    // with (c c^T) y = -w d. Rank-revealing solve tolerates redundant rows.
    const Eigen::MatrixXd gram = c * c.transpose();
    lambda = gram.completeOrthogonalDecomposition().solve(-w * d);
    u = -(1.0 / w) * c.transpose() * lambda;
    const double scale = 1.0 + d.cwiseAbs().maxCoeff();
    consistent = ((c * u - d).cwiseAbs().maxCoeff() <= kConsistencyTol * scale);
  };

  bool consistent = true;
  resolve(consistent);

  for (result.iterations = 0; result.iterations < max_iterations; ++result.iterations) {
    if (!consistent) {
      result.status = QpStatus::kInfeasible;
      return result;
    }

    // Drop the most negative active multiplier first.
    Eigen::Index drop = -1;
    double most_negative = -kMultTol;
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(active.size()); ++k) {
      const double mu = lambda(n_eq + k);
      if (mu < most_negative) {
        most_negative = mu;
        drop = k;
      }
    }
    if (drop >= 0) {
      active.erase(active.begin() + drop);
      resolve(consistent);
      continue;
    }

    // Then activate violated inequalities, batched so long stretches of
    // saturated bounds don't cost one factorization each.
    constexpr int kBatch = 16;
    std::vector<std::pair<double, Eigen::Index>> violated;
    if (n_in > 0) {
      const Eigen::VectorXd slack = problem.b_in - problem.a_in * u;
      for (Eigen::Index i = 0; i < n_in; ++i) {
        if (-slack(i) > kFeasTol &&
            std::find(active.begin(), active.end(), i) == active.end()) {
          violated.emplace_back(-slack(i), i);
        }
      }
    }
    if (violated.empty()) {
      result.status = QpStatus::kOptimal;
      break;
    }
    std::sort(violated.begin(), violated.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    const double worst = violated.front().first;
    int added = 0;
    for (const auto& [violation, row] : violated) {
      if (added >= kBatch || violation < 0.2 * worst) break;
      active.push_back(row);
      ++added;
    }
    resolve(consistent);
  }

  if (result.status != QpStatus::kOptimal) {
    if (result.iterations >= max_iterations) result.status = QpStatus::kIterationLimit;
    return result;
  }

  result.u = u;
  result.eq_multipliers = lambda.head(n_eq);
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(active.size()); ++k) {
    result.in_multipliers(active[k]) = lambda(n_eq + k);
  }

  // KKT certificate: stationarity, primal feasibility, dual feasibility,
  // complementary slackness.
  Eigen::VectorXd grad = w * u;
  if (n_eq > 0) grad += problem.a_eq.transpose() * result.eq_multipliers;
  if (n_in > 0) grad += problem.a_in.transpose() * result.in_multipliers;
  double residual = grad.cwiseAbs().maxCoeff();
  if (n_eq > 0) {
    residual = std::max(residual, (problem.a_eq * u - problem.b_eq).cwiseAbs().maxCoeff());
  }
  if (n_in > 0) {
    const Eigen::VectorXd slack = problem.b_in - problem.a_in * u;
    residual = std::max(residual, std::max(0.0, -slack.minCoeff()));
    residual = std::max(residual, std::max(0.0, -result.in_multipliers.minCoeff()));
    residual =
        std::max(residual, result.in_multipliers.cwiseProduct(slack).cwiseAbs().maxCoeff());
  }
  result.kkt_residual = residual;
  return result;
}

}  // namespace synctraffic
