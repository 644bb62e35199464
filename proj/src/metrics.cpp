// SPDX-License-Identifier: Apache-2.0
#include "synctraffic/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace synctraffic {

double FuelModel::rate_g_per_s(double engine_power_w) const {
  const double kw = std::max(0.0, engine_power_w) / 1000.0;
  if (table_kw_to_g_per_s.empty()) {
    return idle_rate_g_per_s + marginal_rate_g_per_kj * kw;
  }
  const auto& t = table_kw_to_g_per_s;
  if (kw <= t.front().first) return t.front().second;
  if (kw >= t.back().first) return t.back().second;
  auto hi = std::upper_bound(t.begin(), t.end(), kw,
                             [](double x, const auto& row) { return x < row.first; });
  const auto lo = hi - 1;
  const double frac = (kw - lo->first) / (hi->first - lo->first);
  return lo->second + frac * (hi->second - lo->second);
}

double wheel_power_w(double speed_mps, double accel_mps2, const LongitudinalParams& p) {
  const double drag = 0.5 * p.air_density_kg_m3 * p.drag_area_m2 * speed_mps * speed_mps;
  const double rolling =
      (speed_mps > 0.0) ? p.rolling_coefficient * p.mass_kg * p.gravity_mps2 : 0.0;
  const double force = p.mass_kg * accel_mps2 + drag + rolling;
  return force * speed_mps;
}

double engine_fuel_rate_g_per_s(double wheel_power, const LongitudinalParams& p,
                                const FuelModel& fuel) {
  const double engine_power_w = std::max(0.0, wheel_power) / p.driveline_efficiency;
  return fuel.rate_g_per_s(engine_power_w);
}

double EnergyBreakdown::balance_residual_kj() const {
  return positive_kj - (kinetic_delta_kj + brake_kj + drag_kj + rolling_kj);
}

double EnergyBreakdown::balance_residual_fraction() const {
  const double scale = std::max({positive_kj, std::abs(kinetic_delta_kj), 1e-9});
  return std::abs(balance_residual_kj()) / scale;
}

void EnergyAccumulator::add_interval(double v_start, double v_end, double dt_s) {
  if (first_) {
    v_first_ = v_start;
    first_ = false;
  }
  v_last_ = v_end;
  const double v_mid = 0.5 * (v_start + v_end);
  const double accel = (v_end - v_start) / dt_s;
  const double drag = 0.5 * params_.air_density_kg_m3 * params_.drag_area_m2 * v_mid * v_mid;
  const double rolling =
      (v_mid > 0.0) ? params_.rolling_coefficient * params_.mass_kg * params_.gravity_mps2 : 0.0;
  const double force = params_.mass_kg * accel + drag + rolling;
  const double distance = v_mid * dt_s;

  totals_.drag_kj += drag * distance / 1000.0;
  totals_.rolling_kj += rolling * distance / 1000.0;
  if (force >= 0.0) {
    totals_.positive_kj += force * distance / 1000.0;
  } else {
    totals_.brake_kj += -force * distance / 1000.0;
  }
  totals_.fuel_g += engine_fuel_rate_g_per_s(force * v_mid, params_, fuel_) * dt_s;
  totals_.moving_distance_m += distance;
  totals_.kinetic_delta_kj =
      0.5 * params_.mass_kg * (v_last_ * v_last_ - v_first_ * v_first_) / 1000.0;
}

EnergyBreakdown energy_losses(std::span<const double> speeds, double dt_s,
                              const LongitudinalParams& params, const FuelModel& fuel) {
  EnergyAccumulator acc(params, fuel);
  for (std::size_t k = 0; k + 1 < speeds.size(); ++k) {
    acc.add_interval(speeds[k], speeds[k + 1], dt_s);
  }
  return acc.totals();
}

double delay_time_s_per_m(double travel_time_s, double route_distance_m,
                          double nominal_speed_mps) {
  const double delay =
      (travel_time_s - route_distance_m / nominal_speed_mps) / route_distance_m;
  return std::max(delay, -1e-6);
}

namespace {

StrategyAggregate aggregate_window(std::span<const VehicleMetrics> metrics, int first,
                                   int last) {
  StrategyAggregate agg;
  double fuel_sum = 0.0, delay_sum = 0.0;
  for (const auto& m : metrics) {
    if (!m.completed || m.arrival_index < first || m.arrival_index > last) continue;
    ++agg.vehicles;
    fuel_sum += m.fuel_g;
    delay_sum += m.delay_s_per_m;
    agg.brake_total_kj += m.brake_kj;
    agg.drag_total_kj += m.drag_kj;
    agg.rolling_total_kj += m.rolling_kj;
  }
  if (agg.vehicles == 0) return agg;
  agg.mean_fuel_g = fuel_sum / agg.vehicles;
  agg.mean_delay_s_per_m = delay_sum / agg.vehicles;
  double fuel_var = 0.0, delay_var = 0.0;
  for (const auto& m : metrics) {
    if (!m.completed || m.arrival_index < first || m.arrival_index > last) continue;
    fuel_var += (m.fuel_g - agg.mean_fuel_g) * (m.fuel_g - agg.mean_fuel_g);
    delay_var += (m.delay_s_per_m - agg.mean_delay_s_per_m) *
                 (m.delay_s_per_m - agg.mean_delay_s_per_m);
  }
  agg.std_fuel_g = std::sqrt(fuel_var / agg.vehicles);
  agg.std_delay_s_per_m = std::sqrt(delay_var / agg.vehicles);
  return agg;
}

}  // namespace

ComparisonSummary aggregate_report(std::span<const VehicleMetrics> candidate,
                                   std::span<const VehicleMetrics> reference,
                                   int window_first, int window_last) {
  if (window_first < 1 || window_last < window_first) {
    throw std::invalid_argument("aggregate_report: malformed vehicle window");
  }
  ComparisonSummary summary;
  summary.candidate = aggregate_window(candidate, window_first, window_last);
  summary.reference = aggregate_window(reference, window_first, window_last);
  if (summary.candidate.vehicles == 0 || summary.reference.vehicles == 0) {
    throw std::invalid_argument(
        "aggregate_report: vehicle window has no completed vehicles in one of the runs");
  }
  auto pct = [](double ref, double cand) {
    return (ref != 0.0) ? 100.0 * (ref - cand) / ref : 0.0;
  };
  summary.fuel_reduction_pct = pct(summary.reference.mean_fuel_g, summary.candidate.mean_fuel_g);
  summary.delay_reduction_pct =
      pct(summary.reference.mean_delay_s_per_m, summary.candidate.mean_delay_s_per_m);
  summary.brake_reduction_pct =
      pct(summary.reference.brake_total_kj, summary.candidate.brake_total_kj);
  summary.brake_reduction_kj = summary.reference.brake_total_kj - summary.candidate.brake_total_kj;
  summary.drag_reduction_kj = summary.reference.drag_total_kj - summary.candidate.drag_total_kj;
  summary.rolling_reduction_kj =
      summary.reference.rolling_total_kj - summary.candidate.rolling_total_kj;
  return summary;
}

}  // namespace synctraffic
