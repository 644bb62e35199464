// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace synctraffic {

struct PlannerBounds {
  double v_min_mps = 0.0;
  double v_max_mps = 15.0;
  double a_min_mps2 = -4.0;
  double a_max_mps2 = 3.0;
  double min_gap_m = 7.0;
};

// Position of the committed leader path at a horizon offset, already
// extrapolated past the leader's own horizon.
using LeaderPath = std::function<double(double tau_s)>;

struct PlanningProblem {
  double s0_m = 0.0;
  double v0_mps = 0.0;
  double a0_mps2 = 0.0;
  double horizon_s = 0.0;
  double terminal_speed_mps = 0.0;
  double terminal_position_m = 0.0;  // the crossing, unless the horizon is capped
  PlannerBounds bounds;
  std::optional<LeaderPath> leader;
};

// Closed-form minimum-mean-square-jerk trajectory: quadratic jerk, quintic
// position, pinned at both ends of the horizon.
struct QuinticPlan {
  double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0, c5 = 0.0, c6 = 0.0;
  double horizon_s = 0.0;

  double jerk(double tau_s) const;
  double accel(double tau_s) const;
  double speed(double tau_s) const;
  double position(double tau_s) const;
  double first_input() const { return -c3; }
};

enum class Transcription { kForwardEuler, kExactHold };

struct DiscretePlan {
  double dt_s = 0.0;
  std::vector<double> position_m;  // knots 0..n
  std::vector<double> speed_mps;
  std::vector<double> accel_mps2;
  std::vector<double> jerk_mps3;   // intervals 0..n-1
  double kkt_residual = 0.0;

  double first_input() const { return jerk_mps3.empty() ? 0.0 : jerk_mps3.front(); }
};

struct Violation {
  enum class Kind { kSpeedLow, kSpeedHigh, kAccelLow, kAccelHigh, kGap } kind;
  double tau_s = 0.0;
  double value = 0.0;
  double bound = 0.0;
};

struct ConstraintReport {
  std::vector<Violation> violations;
  bool empty() const { return violations.empty(); }
};

// One committed trajectory, analytic or discretized, with extrapolation past
// its horizon at the terminal speed.
struct Plan {
  enum class Kind { kAnalytic, kDiscrete } kind = Kind::kAnalytic;
  QuinticPlan quintic;
  DiscretePlan discrete;
  double terminal_speed_mps = 0.0;

  double horizon_s() const;
  double position(double tau_s) const;
  double speed(double tau_s) const;
  double accel(double tau_s) const;
  double first_input() const;
};

class DegenerateHorizonError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Solves the two-point boundary problem by assembling the 6x6 system of the
// polynomial family evaluated at both ends of the horizon.
QuinticPlan solve_unconstrained(const PlanningProblem& problem);

// Samples an analytic plan on a grid and reports every bound or gap breach.
ConstraintReport check_constraints(const QuinticPlan& plan, const PlanningProblem& problem,
                                   double sample_dt_s);

struct QpInfeasible {
  std::string reason;
};

struct QpPlanOutcome {
  std::optional<DiscretePlan> plan;
  std::optional<QpInfeasible> failure;
};

// Discretized constrained solve: minimum mean-square jerk over n = ceil(T/dt)
// intervals, terminal state pinned, per-knot bound and gap rows. The analytic
// plan seeds nothing numerically (the active-set solver starts from the
// equality-constrained optimum, which is its discrete counterpart) but its
// violation pattern decides whether this path runs at all. Knot spacing of
// 0.025 s keeps the discrete optimum within ~3e-4 of the analytic one.
QpPlanOutcome solve_constrained_qp(const PlanningProblem& problem, double knot_dt_s = 0.025,
                                   Transcription transcription = Transcription::kExactHold);

struct PlanStepResult {
  double first_input_mps3 = 0.0;
  Plan plan;
  bool used_qp = false;
  bool emergency = false;
};

// Analytic solve, constraint check, QP fallback, emergency braking on
// infeasibility. Recomputed every tick by the engine.
PlanStepResult plan_step(const PlanningProblem& problem, double check_dt_s,
                         double knot_dt_s = 0.025,
                         Transcription transcription = Transcription::kExactHold);

}  // namespace synctraffic
