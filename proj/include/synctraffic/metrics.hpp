// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace synctraffic {

struct LongitudinalParams {
  double mass_kg = 1200.0;
  double drag_area_m2 = 0.6;  // C_d * A_f
  double air_density_kg_m3 = 1.225;
  double rolling_coefficient = 0.01;
  double gravity_mps2 = 9.81;
  double driveline_efficiency = 0.9;
};

// Fuel rate as a function of engine power: an affine idle+marginal line by
// default, or a tabulated curve with linear interpolation when provided.
struct FuelModel {
  double idle_rate_g_per_s = 0.15;
  double marginal_rate_g_per_kj = 0.07;
  std::vector<std::pair<double, double>> table_kw_to_g_per_s;  // optional, sorted by power

  double rate_g_per_s(double engine_power_w) const;
};

// Signed tractive power at the wheels for a speed/acceleration sample.
double wheel_power_w(double speed_mps, double accel_mps2, const LongitudinalParams& params);

// Fuel rate for a wheel power demand; braking and idling burn the idle rate.
double engine_fuel_rate_g_per_s(double wheel_power_w, const LongitudinalParams& params,
                                const FuelModel& fuel);

struct EnergyBreakdown {
  double brake_kj = 0.0;
  double drag_kj = 0.0;
  double rolling_kj = 0.0;
  double positive_kj = 0.0;       // propulsive work delivered at the wheels
  double kinetic_delta_kj = 0.0;  // KE(end) - KE(start)
  double fuel_g = 0.0;
  double moving_distance_m = 0.0;

  // positive work = dKE + brake + drag + rolling, up to integration residue
  double balance_residual_kj() const;
  double balance_residual_fraction() const;
};

// Streaming per-vehicle integration over fixed-step speed samples. The
// interval acceleration is recovered from the speed difference, which makes
// the kinetic-energy ledger telescope exactly.
class EnergyAccumulator {
 public:
  EnergyAccumulator() = default;
  EnergyAccumulator(const LongitudinalParams& params, const FuelModel& fuel)
      : params_(params), fuel_(fuel) {}

  void add_interval(double v_start_mps, double v_end_mps, double dt_s);
  const EnergyBreakdown& totals() const { return totals_; }

 private:
  LongitudinalParams params_;
  FuelModel fuel_;
  EnergyBreakdown totals_;
  bool first_ = true;
  double v_first_ = 0.0;
  double v_last_ = 0.0;
};

// Batch counterpart over a logged speed trace sampled at dt.
EnergyBreakdown energy_losses(std::span<const double> speeds_mps, double dt_s,
                              const LongitudinalParams& params, const FuelModel& fuel);

// Travel time in excess of cruising the route at the nominal speed, per meter
// traveled. Slightly negative values from discretization clamp at -1e-6.
double delay_time_s_per_m(double travel_time_s, double route_distance_m,
                          double nominal_speed_mps);

struct VehicleMetrics {
  int vehicle_id = -1;
  int arrival_index = 0;  // 1-based spawn order
  bool completed = false;
  double fuel_g = 0.0;
  double delay_s_per_m = 0.0;
  double brake_kj = 0.0;
  double drag_kj = 0.0;
  double rolling_kj = 0.0;
  double distance_m = 0.0;
  double travel_time_s = 0.0;
  double positive_kj = 0.0;
  double kinetic_delta_kj = 0.0;
  double balance_residual_fraction = 0.0;
};

struct StrategyAggregate {
  int vehicles = 0;
  double mean_fuel_g = 0.0;
  double mean_delay_s_per_m = 0.0;
  double std_fuel_g = 0.0;
  double std_delay_s_per_m = 0.0;
  double brake_total_kj = 0.0;
  double drag_total_kj = 0.0;
  double rolling_total_kj = 0.0;
};

struct ComparisonSummary {
  StrategyAggregate candidate;  // synchronized strategy
  StrategyAggregate reference;  // baseline
  double fuel_reduction_pct = 0.0;
  double delay_reduction_pct = 0.0;
  double brake_reduction_pct = 0.0;
  double brake_reduction_kj = 0.0;
  double drag_reduction_kj = 0.0;
  double rolling_reduction_kj = 0.0;
};

// Window is inclusive over 1-based arrival indices; incomplete vehicles are
// excluded. Throws when either run has no completed vehicle in the window.
ComparisonSummary aggregate_report(std::span<const VehicleMetrics> candidate,
                                   std::span<const VehicleMetrics> reference,
                                   int window_first, int window_last);

}  // namespace synctraffic
