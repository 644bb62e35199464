// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "synctraffic/kuramoto.hpp"
#include "synctraffic/metrics.hpp"
#include "synctraffic/network.hpp"
#include "synctraffic/parallel.hpp"
#include "synctraffic/planner.hpp"

namespace synctraffic {

struct ArrivalEvent {
  int id = -1;                   // spawn order, assigned after merging entries
  double time_s = 0.0;           // scheduled arrival at the network edge
  int entry_segment = -1;
  std::vector<Movement> route;   // one movement per intersection on the path
};

struct ArrivalConfig {
  double entry_rate_veh_per_h = 750.0;  // per entry road
  double turn_probability = 0.2;
  double duration_s = 600.0;            // injection horizon
  std::uint64_t seed = 1;
};

// Deterministic function of (network, config): per-entry exponential gaps and
// per-intersection turn draws, merged by (time, entry). Both strategies replay
// the same stream.
std::vector<ArrivalEvent> generate_arrival_stream(const NetworkConfig& net,
                                                  const ArrivalConfig& config);

// Path length from the spawn point to the network exit.
double route_length_m(const NetworkConfig& net, const ArrivalEvent& event);

struct EngineParams {
  KuramotoParams kuramoto;
  PlannerBounds bounds;
  double qp_knot_dt_s = 0.1;          // engine-side knot spacing, widened for long horizons
  double plan_horizon_cap_s = 30.0;   // beyond this, track the consensus reference instead
  Transcription transcription = Transcription::kExactHold;
  Exec exec = Exec::kSerial;
  double conflict_clearance_s = 1.0;  // audit threshold at the conflict point
  double audit_slack_s = 0.2;         // closed-loop timing tolerance (two ticks)
};

struct LogRow {
  double t_s = 0.0;
  int vehicle_id = -1;
  int segment_id = -1;
  double s_m = 0.0;
  double v_mps = 0.0;
  double a_mps2 = 0.0;
  double u_mps3 = 0.0;
  double theta_rad = 0.0;
  double beacon_rad = 0.0;
};

struct CrossingEvent {
  double conflict_time_s = 0.0;  // passage through the conflict point
  int intersection_id = -1;
  int segment_id = -1;
  int vehicle_id = -1;
};

struct ConflictFlag {
  int intersection_id = -1;
  int vehicle_a = -1, vehicle_b = -1;
  double separation_s = 0.0;
};

struct GapFlag {
  double t_s = 0.0;
  int segment_id = -1;
  int leader_id = -1, follower_id = -1;
  double gap_m = 0.0;
};

struct SafetyReport {
  std::vector<ConflictFlag> conflict_flags;
  std::vector<GapFlag> gap_flags;
  std::size_t straight_crossings = 0;
  bool clean() const { return conflict_flags.empty() && gap_flags.empty(); }
};

class Engine {
 public:
  Engine(NetworkConfig net, EngineParams params, std::vector<ArrivalEvent> arrivals,
         LongitudinalParams longitudinal = {}, FuelModel fuel = {});

  void step();
  // Runs the injection horizon, then keeps stepping until the network drains
  // or the drain timeout passes.
  void run(double horizon_s, bool drain = true, double drain_timeout_s = 900.0);

  double time_s() const { return time_s_; }
  int active_count() const;
  int spawned_count() const { return spawned_; }
  double mean_phase_unwrapped_rad() const { return mean_phase_unwrapped_rad_; }
  OrderParameter last_order() const { return last_order_; }

  const std::vector<VehicleMetrics>& completed_metrics() const { return completed_; }
  std::vector<VehicleMetrics> all_metrics() const;  // completed plus in-flight
  const SafetyReport& safety() const { return safety_; }
  const std::vector<CrossingEvent>& crossings() const { return crossing_events_; }
  std::size_t qp_solves() const { return qp_solves_; }
  std::size_t emergency_events() const { return emergency_events_; }

  void set_log_sink(std::function<void(const LogRow&)> sink) { log_sink_ = std::move(sink); }

  struct VehicleView {
    int id;
    int segment;
    double s, v, a;
    double theta, beacon;
  };
  std::vector<VehicleView> snapshot() const;

 private:
  struct Vehicle {
    int id = -1;
    int arrival_index = 0;
    double arrival_time_s = 0.0;
    double spawn_time_s = 0.0;
    std::vector<Movement> route;
    std::size_t next_move = 0;
    int segment = -1;
    double s = 0.0, v = 0.0, a = 0.0;
    double last_u = 0.0;
    PhaseState phase;
    Plan committed;
    bool has_plan = false;
    double plan_age_s = 0.0;
    double route_len_m = 0.0;
    EnergyAccumulator energy;
  };

  void spawn_due_arrivals();
  void plan_segment(const std::vector<int>& order);
  void integrate_and_log();
  void process_transitions();
  void audit_gaps();
  void record_crossing(const Vehicle& veh, int intersection, double cross_time);
  void retire(Vehicle& veh, double retire_time);
  bool entry_free(int segment_id) const;
  std::vector<int> active_sorted_by_id() const;
  // Vehicles on a segment, front (largest s) first.
  std::vector<int> segment_order(int segment_id) const;

  NetworkConfig net_;
  EngineParams params_;
  LongitudinalParams longitudinal_;
  FuelModel fuel_;
  std::vector<ArrivalEvent> arrivals_;
  std::size_t next_arrival_ = 0;
  std::map<int, std::deque<std::size_t>> entry_queues_;

  std::vector<Vehicle> vehicles_;          // slot per spawned vehicle
  std::vector<char> active_;               // parallel to vehicles_
  double time_s_ = 0.0;
  int spawned_ = 0;
  double mean_phase_unwrapped_rad_ = 0.0;
  OrderParameter last_order_;

  std::vector<VehicleMetrics> completed_;
  SafetyReport safety_;
  std::vector<CrossingEvent> crossing_events_;
  std::map<int, std::vector<CrossingEvent>> recent_crossings_;  // per intersection
  std::atomic<std::size_t> qp_solves_ = 0;
  std::atomic<std::size_t> emergency_events_ = 0;
  std::function<void(const LogRow&)> log_sink_;
};

}  // namespace synctraffic
