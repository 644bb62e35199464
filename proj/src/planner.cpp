// SPDX-License-Identifier: Apache-2.0
#include "synctraffic/planner.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "synctraffic/qp.hpp"

namespace synctraffic {

namespace {
constexpr double kHorizonFloor = 1e-6;
constexpr double kCheckTol = 1e-9;
}  // namespace

double QuinticPlan::jerk(double t) const { return -0.5 * c1 * t * t + c2 * t - c3; }

double QuinticPlan::accel(double t) const {
  return -c1 * t * t * t / 6.0 + 0.5 * c2 * t * t - c3 * t + c4;
}

double QuinticPlan::speed(double t) const {
  return -c1 * t * t * t * t / 24.0 + c2 * t * t * t / 6.0 - 0.5 * c3 * t * t + c4 * t + c5;
}

double QuinticPlan::position(double t) const {
  return -c1 * t * t * t * t * t / 120.0 + c2 * t * t * t * t / 24.0 - c3 * t * t * t / 6.0 +
         0.5 * c4 * t * t + c5 * t + c6;
}

double Plan::horizon_s() const {
  if (kind == Kind::kAnalytic) return quintic.horizon_s;
  return discrete.dt_s * static_cast<double>(discrete.jerk_mps3.size());
}

double Plan::position(double tau_s) const {
  const double T = horizon_s();
  if (tau_s > T) {
    // Past the pinned end the vehicle keeps the terminal speed.
    const double end = (kind == Kind::kAnalytic) ? quintic.position(T) : discrete.position_m.back();
    return end + terminal_speed_mps * (tau_s - T);
  }
  if (kind == Kind::kAnalytic) return quintic.position(tau_s);
  const double x = tau_s / discrete.dt_s;
  const auto k = static_cast<std::size_t>(std::clamp(
      std::floor(x), 0.0, static_cast<double>(discrete.position_m.size() - 2)));
  const double frac = x - static_cast<double>(k);
  return discrete.position_m[k] + frac * (discrete.position_m[k + 1] - discrete.position_m[k]);
}

double Plan::speed(double tau_s) const {
  const double T = horizon_s();
  if (tau_s >= T) return terminal_speed_mps;
  if (kind == Kind::kAnalytic) return quintic.speed(tau_s);
  const double x = tau_s / discrete.dt_s;
  const auto k = static_cast<std::size_t>(std::clamp(
      std::floor(x), 0.0, static_cast<double>(discrete.speed_mps.size() - 2)));
  const double frac = x - static_cast<double>(k);
  return discrete.speed_mps[k] + frac * (discrete.speed_mps[k + 1] - discrete.speed_mps[k]);
}

double Plan::accel(double tau_s) const {
  const double T = horizon_s();
  if (tau_s >= T) return 0.0;
  if (kind == Kind::kAnalytic) return quintic.accel(tau_s);
  const double x = tau_s / discrete.dt_s;
  const auto k = static_cast<std::size_t>(std::clamp(
      std::floor(x), 0.0, static_cast<double>(discrete.accel_mps2.size() - 2)));
  return discrete.accel_mps2[k];
}

double Plan::first_input() const {
  return (kind == Kind::kAnalytic) ? quintic.first_input() : discrete.first_input();
}

QuinticPlan solve_unconstrained(const PlanningProblem& p) {
  const double T = p.horizon_s;
  if (!(T >= kHorizonFloor)) {
    throw DegenerateHorizonError("solve_unconstrained: horizon below numerical floor");
  }
  auto rows_at = [](double t, Eigen::Matrix<double, 6, 6>& m, int base) {
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    m.row(base + 0) << -t5 / 120.0, t4 / 24.0, -t3 / 6.0, 0.5 * t2, t, 1.0;   // position
    m.row(base + 1) << -t4 / 24.0, t3 / 6.0, -0.5 * t2, t, 1.0, 0.0;          // speed
    m.row(base + 2) << -t3 / 6.0, 0.5 * t2, -t, 1.0, 0.0, 0.0;                // acceleration
  };
  Eigen::Matrix<double, 6, 6> m;
  rows_at(0.0, m, 0);
  rows_at(T, m, 3);
  Eigen::Matrix<double, 6, 1> rhs;
  rhs << p.s0_m, p.v0_mps, p.a0_mps2, p.terminal_position_m, p.terminal_speed_mps, 0.0;
  const Eigen::Matrix<double, 6, 1> c = m.partialPivLu().solve(rhs);
  QuinticPlan plan;
  plan.c1 = c(0);
  plan.c2 = c(1);
  plan.c3 = c(2);
  plan.c4 = c(3);
  plan.c5 = c(4);
  plan.c6 = c(5);
  plan.horizon_s = T;
  return plan;
}

ConstraintReport check_constraints(const QuinticPlan& plan, const PlanningProblem& p,
                                   double sample_dt_s) {
  ConstraintReport report;
  const double T = plan.horizon_s;
  const int n = std::max(1, static_cast<int>(std::ceil(T / sample_dt_s)));
  for (int k = 0; k <= n; ++k) {
    const double tau = std::min(T, static_cast<double>(k) * sample_dt_s);
    const double v = plan.speed(tau);
    const double a = plan.accel(tau);
    if (v < p.bounds.v_min_mps - kCheckTol) {
      report.violations.push_back({Violation::Kind::kSpeedLow, tau, v, p.bounds.v_min_mps});
    }
    if (v > p.bounds.v_max_mps + kCheckTol) {
      report.violations.push_back({Violation::Kind::kSpeedHigh, tau, v, p.bounds.v_max_mps});
    }
    if (a < p.bounds.a_min_mps2 - kCheckTol) {
      report.violations.push_back({Violation::Kind::kAccelLow, tau, a, p.bounds.a_min_mps2});
    }
    if (a > p.bounds.a_max_mps2 + kCheckTol) {
      report.violations.push_back({Violation::Kind::kAccelHigh, tau, a, p.bounds.a_max_mps2});
    }
    if (p.leader) {
      const double gap = (*p.leader)(tau) - plan.position(tau);
      if (gap < p.bounds.min_gap_m - kCheckTol) {
        report.violations.push_back({Violation::Kind::kGap, tau, gap, p.bounds.min_gap_m});
      }
    }
  }
  return report;
}

namespace {

struct CondensedDynamics {
  // State value at knot k is offset[k] + gain.row(k) . u
  Eigen::VectorXd s_offset, v_offset, a_offset;
  Eigen::MatrixXd s_gain, v_gain, a_gain;
  int n = 0;
  double h = 0.0;
};

CondensedDynamics condense(const PlanningProblem& p, double sample_dt_s,
                           Transcription transcription) {
  CondensedDynamics d;
  d.n = std::max(1, static_cast<int>(std::ceil(p.horizon_s / sample_dt_s)));
  d.h = p.horizon_s / d.n;
  const int n = d.n;
  d.s_offset.resize(n + 1);
  d.v_offset.resize(n + 1);
  d.a_offset.resize(n + 1);
  d.s_gain = Eigen::MatrixXd::Zero(n + 1, n);
  d.v_gain = Eigen::MatrixXd::Zero(n + 1, n);
  d.a_gain = Eigen::MatrixXd::Zero(n + 1, n);
  d.s_offset(0) = p.s0_m;
  d.v_offset(0) = p.v0_mps;
  d.a_offset(0) = p.a0_mps2;
  const double h = d.h;
  for (int k = 0; k < n; ++k) {
    if (transcription == Transcription::kForwardEuler) {
      d.s_offset(k + 1) = d.s_offset(k) + h * d.v_offset(k);
      d.s_gain.row(k + 1) = d.s_gain.row(k) + h * d.v_gain.row(k);
      d.v_offset(k + 1) = d.v_offset(k) + h * d.a_offset(k);
      d.v_gain.row(k + 1) = d.v_gain.row(k) + h * d.a_gain.row(k);
      d.a_offset(k + 1) = d.a_offset(k);
      d.a_gain.row(k + 1) = d.a_gain.row(k);
      d.a_gain(k + 1, k) += h;
    } else {
      // Piecewise-constant jerk integrated exactly over the interval.
      d.s_offset(k + 1) = d.s_offset(k) + h * d.v_offset(k) + 0.5 * h * h * d.a_offset(k);
      d.s_gain.row(k + 1) =
          d.s_gain.row(k) + h * d.v_gain.row(k) + 0.5 * h * h * d.a_gain.row(k);
      d.s_gain(k + 1, k) += h * h * h / 6.0;
      d.v_offset(k + 1) = d.v_offset(k) + h * d.a_offset(k);
      d.v_gain.row(k + 1) = d.v_gain.row(k) + h * d.a_gain.row(k);
      d.v_gain(k + 1, k) += 0.5 * h * h;
      d.a_offset(k + 1) = d.a_offset(k);
      d.a_gain.row(k + 1) = d.a_gain.row(k);
      d.a_gain(k + 1, k) += h;
    }
  }
  return d;
}

}  // namespace

QpPlanOutcome solve_constrained_qp(const PlanningProblem& p, double knot_dt_s,
                                   Transcription transcription) {
  QpPlanOutcome outcome;
  if (!(p.horizon_s >= kHorizonFloor)) {
    outcome.failure = QpInfeasible{"degenerate horizon"};
    return outcome;
  }
  const CondensedDynamics d = condense(p, knot_dt_s, transcription);
  const int n = d.n;

  // Necessary-condition screen, deliberately loose: the terminal speed change
  // cannot exceed what the acceleration envelope allows over the horizon.
  const double slack = d.h * (std::abs(p.a0_mps2) + std::abs(p.bounds.a_max_mps2) +
                              std::abs(p.bounds.a_min_mps2)) +
                       1e-9;
  const double need_dv = p.terminal_speed_mps - p.v0_mps;
  if (need_dv > p.horizon_s * p.bounds.a_max_mps2 + slack ||
      need_dv < p.horizon_s * p.bounds.a_min_mps2 - slack) {
    outcome.failure = QpInfeasible{"terminal speed outside acceleration envelope"};
    return outcome;
  }

  QpProblem qp;
  qp.weight = d.h;
  qp.a_eq.resize(3, n);
  qp.b_eq.resize(3);
  qp.a_eq.row(0) = d.s_gain.row(n);
  qp.b_eq(0) = p.terminal_position_m - d.s_offset(n);
  qp.a_eq.row(1) = d.v_gain.row(n);
  qp.b_eq(1) = p.terminal_speed_mps - d.v_offset(n);
  qp.a_eq.row(2) = d.a_gain.row(n);
  qp.b_eq(2) = 0.0 - d.a_offset(n);

  const bool with_leader = p.leader.has_value();
  const int m = 4 * n + (with_leader ? n : 0);
  qp.a_in.resize(m, n);
  qp.b_in.resize(m);
  int row = 0;
  for (int k = 1; k <= n; ++k) {
    qp.a_in.row(row) = d.a_gain.row(k);
    qp.b_in(row++) = p.bounds.a_max_mps2 - d.a_offset(k);
    qp.a_in.row(row) = -d.a_gain.row(k);
    qp.b_in(row++) = d.a_offset(k) - p.bounds.a_min_mps2;
    qp.a_in.row(row) = d.v_gain.row(k);
    qp.b_in(row++) = p.bounds.v_max_mps - d.v_offset(k);
    qp.a_in.row(row) = -d.v_gain.row(k);
    qp.b_in(row++) = d.v_offset(k) - p.bounds.v_min_mps;
  }
  if (with_leader) {
    for (int k = 1; k <= n; ++k) {
      const double tau = d.h * k;
      qp.a_in.row(row) = d.s_gain.row(k);
      qp.b_in(row++) = (*p.leader)(tau) - p.bounds.min_gap_m - d.s_offset(k);
    }
  }

  const QpResult res = solve_qp(qp);
  if (res.status != QpStatus::kOptimal) {
    outcome.failure = QpInfeasible{res.status == QpStatus::kInfeasible
                                       ? "active constraint system inconsistent"
                                       : "iteration limit"};
    return outcome;
  }

  DiscretePlan plan;
  plan.dt_s = d.h;
  plan.kkt_residual = res.kkt_residual;
  plan.jerk_mps3.assign(res.u.data(), res.u.data() + n);
  plan.position_m.resize(n + 1);
  plan.speed_mps.resize(n + 1);
  plan.accel_mps2.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    plan.position_m[k] = d.s_offset(k) + d.s_gain.row(k).dot(res.u);
    plan.speed_mps[k] = d.v_offset(k) + d.v_gain.row(k).dot(res.u);
    plan.accel_mps2[k] = d.a_offset(k) + d.a_gain.row(k).dot(res.u);
  }
  outcome.plan = std::move(plan);
  return outcome;
}

PlanStepResult plan_step(const PlanningProblem& problem, double check_dt_s,
                         double knot_dt_s, Transcription transcription) {
  PlanStepResult result;
  const QuinticPlan analytic = solve_unconstrained(problem);
  const ConstraintReport report = check_constraints(analytic, problem, check_dt_s);
  if (report.empty()) {
    result.plan.kind = Plan::Kind::kAnalytic;
    result.plan.quintic = analytic;
    result.plan.terminal_speed_mps = problem.terminal_speed_mps;
    result.first_input_mps3 = analytic.first_input();
    return result;
  }
  result.used_qp = true;
  QpPlanOutcome qp = solve_constrained_qp(problem, knot_dt_s, transcription);
  if (qp.plan) {
    result.plan.kind = Plan::Kind::kDiscrete;
    result.plan.discrete = std::move(*qp.plan);
    result.plan.terminal_speed_mps = problem.terminal_speed_mps;
    result.first_input_mps3 = result.plan.discrete.first_input();
    return result;
  }
  result.emergency = true;
  return result;
}

}  // namespace synctraffic
