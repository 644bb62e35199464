#include <cstdio>
#include <cmath>
#include "synctraffic/planner.hpp"
#include "synctraffic/qp.hpp"

using namespace synctraffic;

int main() {
  // Case A: inactive constraints, compare QP knots vs analytic for both transcriptions.
  {
    PlanningProblem p;
    p.s0_m = -100.0; p.v0_mps = 8.0; p.a0_mps2 = 0.0; p.horizon_s = 10.0;
    p.terminal_speed_mps = 10.0;
    const auto an = solve_unconstrained(p);
    printf("analytic check empty=%d\n", (int)check_constraints(an, p, 0.1).empty());
    for (auto tr : {Transcription::kForwardEuler, Transcription::kExactHold}) {
      const auto out = solve_constrained_qp(p, 0.1, tr);
      if (!out.plan) { printf("tr=%d INFEASIBLE %s\n", (int)tr, out.failure->reason.c_str()); continue; }
      const auto& qp = *out.plan;
      double worst_s = 0, worst_v = 0, worst_a = 0;
      for (size_t k = 0; k < qp.position_m.size(); ++k) {
        double tau = k * qp.dt_s;
        worst_s = std::max(worst_s, std::abs(qp.position_m[k] - an.position(tau)));
        worst_v = std::max(worst_v, std::abs(qp.speed_mps[k] - an.speed(tau)));
        worst_a = std::max(worst_a, std::abs(qp.accel_mps2[k] - an.accel(tau)));
      }
      printf("tr=%d kkt=%.3e  worst ds=%.5f dv=%.5f da=%.5f\n", (int)tr, qp.kkt_residual, worst_s, worst_v, worst_a);
    }
  }
  // Case B: active accel bound.
  {
    PlanningProblem p;
    p.s0_m = -60.0; p.v0_mps = 2.0; p.a0_mps2 = 0.0; p.horizon_s = 6.0;
    p.terminal_speed_mps = 10.0;
    const auto out = solve_constrained_qp(p, 0.1);
    if (!out.plan) { printf("B INFEASIBLE %s\n", out.failure->reason.c_str()); return 0; }
    const auto& qp = *out.plan;
    double amax = -1e9, vmin = 1e9;
    for (size_t k = 0; k < qp.accel_mps2.size(); ++k) {
      amax = std::max(amax, qp.accel_mps2[k]);
      vmin = std::min(vmin, qp.speed_mps[k]);
    }
    printf("B kkt=%.3e amax=%.6f vmin=%.6f sT=%.2e vT=%.6f aT=%.2e\n",
           qp.kkt_residual, amax, vmin, qp.position_m.back(), qp.speed_mps.back(), qp.accel_mps2.back());
  }
  // Case C: squeezing leader.
  {
    PlanningProblem p;
    p.s0_m = -80.0; p.v0_mps = 12.0; p.a0_mps2 = 0.0; p.horizon_s = 8.0;
    p.terminal_speed_mps = 10.0;
    const auto an = solve_unconstrained(p);
    const double T = p.horizon_s, S = p.bounds.min_gap_m;
    p.leader = [an, S, T](double tau) {
      const double lift = std::max(0.0, tau - 0.7 * T) * 12.0;
      const double base = (tau <= T) ? an.position(tau) : an.position(T) + 10.0 * (tau - T);
      return base + (S - 1.0) + lift;
    };
    const auto out = solve_constrained_qp(p, 0.1);
    if (!out.plan) { printf("C INFEASIBLE %s\n", out.failure->reason.c_str()); return 0; }
    const auto& qp = *out.plan;
    double worst_gap = 1e9;
    for (size_t k = 1; k < qp.position_m.size(); ++k) {
      double tau = k * qp.dt_s;
      worst_gap = std::min(worst_gap, (*p.leader)(tau) - qp.position_m[k]);
    }
    printf("C kkt=%.3e worst_gap=%.6f sT=%.2e\n", qp.kkt_residual, worst_gap, qp.position_m.back());
  }
  return 0;
}
