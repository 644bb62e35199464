// SPDX-License-Identifier: Apache-2.0
#include "synctraffic/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace synctraffic {

namespace {

constexpr double kDegenerateCoherence = 1e-9;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next_u64() {
    state = splitmix64(state);
    return splitmix64(state);
  }
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
};

// Braking profile used both as the emergency command and as the committed
// path a follower constrains against: jerk drives the acceleration to its
// floor, speed saturates at the lower bound.
DiscretePlan make_braking_profile(double s, double v, double a, double horizon_s,
                                  const PlannerBounds& bounds, double dt_s) {
  DiscretePlan plan;
  plan.dt_s = dt_s;
  const int n = std::max(1, static_cast<int>(std::ceil(horizon_s / dt_s)));
  plan.position_m.reserve(n + 1);
  plan.speed_mps.reserve(n + 1);
  plan.accel_mps2.reserve(n + 1);
  plan.jerk_mps3.reserve(n);
  plan.position_m.push_back(s);
  plan.speed_mps.push_back(v);
  plan.accel_mps2.push_back(a);
  for (int k = 0; k < n; ++k) {
    const double u = (bounds.a_min_mps2 - a) / dt_s;
    plan.jerk_mps3.push_back(u);
    s += dt_s * v;
    v += dt_s * a;
    a = bounds.a_min_mps2;
    if (v <= bounds.v_min_mps) {
      v = bounds.v_min_mps;
      a = 0.0;
    }
    plan.position_m.push_back(s);
    plan.speed_mps.push_back(v);
    plan.accel_mps2.push_back(a);
  }
  return plan;
}

double plan_input_at(const Plan& plan, double age_s) {
  const double horizon = plan.horizon_s();
  if (age_s >= horizon) return 0.0;
  if (plan.kind == Plan::Kind::kAnalytic) return plan.quintic.jerk(age_s);
  const auto& jerk = plan.discrete.jerk_mps3;
  if (jerk.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(
      std::clamp(std::floor(age_s / plan.discrete.dt_s), 0.0,
                 static_cast<double>(jerk.size() - 1)));
  return jerk[k];
}

}  // namespace

std::vector<ArrivalEvent> generate_arrival_stream(const NetworkConfig& net,
                                                  const ArrivalConfig& config) {
  std::vector<ArrivalEvent> merged;
  if (config.entry_rate_veh_per_h <= 0.0 || config.duration_s <= 0.0) return merged;
  const double rate_per_s = config.entry_rate_veh_per_h / 3600.0;
  const auto entries = net.entry_segment_ids();
  for (std::size_t e = 0; e < entries.size(); ++e) {
    Rng rng(splitmix64(config.seed) ^ splitmix64(0xABCD0000ULL + e));
    double t = 0.0;
    while (true) {
      t += -std::log(1.0 - rng.next_unit()) / rate_per_s;
      if (t >= config.duration_s) break;
      ArrivalEvent event;
      event.time_s = t;
      event.entry_segment = entries[e];
      int segment = entries[e];
      while (net.segment(segment).downstream_intersection.has_value()) {
        const auto& seg = net.segment(segment);
        Movement move = Movement::kStraight;
        if (seg.turn_successor && rng.next_unit() < config.turn_probability) {
          move = Movement::kRightTurn;
        }
        event.route.push_back(move);
        segment = (move == Movement::kStraight) ? *seg.straight_successor
                                                : *seg.turn_successor;
      }
      merged.push_back(std::move(event));
    }
  }
  std::stable_sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
    if (a.time_s != b.time_s) return a.time_s < b.time_s;
    return a.entry_segment < b.entry_segment;
  });
  for (std::size_t i = 0; i < merged.size(); ++i) merged[i].id = static_cast<int>(i);
  return merged;
}

double route_length_m(const NetworkConfig& net, const ArrivalEvent& event) {
  double total = net.segment(event.entry_segment).length_m;
  int segment = event.entry_segment;
  for (const auto move : event.route) {
    const auto& seg = net.segment(segment);
    const auto& inter = net.intersection(*seg.downstream_intersection);
    const int next = (move == Movement::kStraight) ? *seg.straight_successor
                                                   : *seg.turn_successor;
    total += (move == Movement::kStraight) ? inter.box_length_m : inter.right_turn_arc_m;
    total += net.segment(next).length_m;
    segment = next;
  }
  return total;
}

Engine::Engine(NetworkConfig net, EngineParams params, std::vector<ArrivalEvent> arrivals,
               LongitudinalParams longitudinal, FuelModel fuel)
    : net_(std::move(net)),
      params_(params),
      longitudinal_(longitudinal),
      fuel_(std::move(fuel)),
      arrivals_(std::move(arrivals)) {
  vehicles_.reserve(arrivals_.size());
  active_.reserve(arrivals_.size());
}

int Engine::active_count() const {
  return static_cast<int>(std::count(active_.begin(), active_.end(), char{1}));
}

std::vector<int> Engine::active_sorted_by_id() const {
  std::vector<int> ids;
  ids.reserve(vehicles_.size());
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    if (active_[i]) ids.push_back(static_cast<int>(i));
  }
  return ids;
}

std::vector<int> Engine::segment_order(int segment_id) const {
  std::vector<int> ids;
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    if (active_[i] && vehicles_[i].segment == segment_id) ids.push_back(static_cast<int>(i));
  }
  std::sort(ids.begin(), ids.end(), [this](int a, int b) {
    if (vehicles_[a].s != vehicles_[b].s) return vehicles_[a].s > vehicles_[b].s;
    return a < b;
  });
  return ids;
}

bool Engine::entry_free(int segment_id) const {
  const auto& seg = net_.segment(segment_id);
  double rearmost = 1e18;
  bool occupied = false;
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    if (active_[i] && vehicles_[i].segment == segment_id) {
      rearmost = std::min(rearmost, vehicles_[i].s);
      occupied = true;
    }
  }
  if (!occupied) return true;
  return rearmost + seg.length_m >= params_.bounds.min_gap_m;
}

void Engine::spawn_due_arrivals() {
  while (next_arrival_ < arrivals_.size() &&
         arrivals_[next_arrival_].time_s <= time_s_ + 1e-12) {
    entry_queues_[arrivals_[next_arrival_].entry_segment].push_back(next_arrival_);
    ++next_arrival_;
  }
  const double wrapped_mean = wrap_to_pi(mean_phase_unwrapped_rad_);
  for (auto& [entry_id, queue] : entry_queues_) {
    while (!queue.empty() && entry_free(entry_id)) {
      const ArrivalEvent& event = arrivals_[queue.front()];
      queue.pop_front();

      const auto& seg = net_.segment(entry_id);
      Vehicle veh;
      veh.id = event.id;
      veh.arrival_index = event.id + 1;
      veh.arrival_time_s = event.time_s;
      veh.spawn_time_s = time_s_;
      veh.route = event.route;
      veh.segment = entry_id;
      veh.s = -seg.length_m;
      veh.v = seg.nominal_speed_mps;
      veh.a = 0.0;
      veh.route_len_m = route_length_m(net_, event);
      veh.energy = EnergyAccumulator(longitudinal_, fuel_);

      veh.phase.theta_rad = position_to_phase(seg, veh.s);
      veh.phase.crossing_phase_rad = position_to_phase(seg, 0.0);
      std::vector<double> leader_beacons;
      for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        if (active_[i] && vehicles_[i].segment == entry_id) {
          leader_beacons.push_back(vehicles_[i].phase.beacon_rad);
        }
      }
      veh.phase.theta_rad = spacing_reset(veh.phase.theta_rad, leader_beacons,
                                          params_.kuramoto.reset_margin_rad);
      veh.phase.beacon_rad = project_mean_phase(wrapped_mean, veh.phase.theta_rad);

      const int slot = veh.id;
      if (slot >= static_cast<int>(vehicles_.size())) {
        vehicles_.resize(slot + 1);
        active_.resize(slot + 1, 0);
      }
      vehicles_[slot] = std::move(veh);
      active_[slot] = 1;
      ++spawned_;
    }
  }
}

void Engine::plan_segment(const std::vector<int>& order) {
  const double wrapped_mean = wrap_to_pi(mean_phase_unwrapped_rad_);
  const double dt = params_.kuramoto.dt_s;
  const double omega = params_.kuramoto.natural_frequency_rad_s;

  std::vector<double> leader_beacons;
  leader_beacons.reserve(order.size());
  const Vehicle* leader = nullptr;

  for (const int id : order) {
    Vehicle& veh = vehicles_[id];
    veh.phase.beacon_rad = project_mean_phase(wrapped_mean, veh.phase.theta_rad);
    const double reset = spacing_reset(veh.phase.theta_rad, leader_beacons,
                                       params_.kuramoto.reset_margin_rad);
    if (reset != veh.phase.theta_rad) {
      veh.phase.theta_rad = reset;
      veh.phase.beacon_rad = project_mean_phase(wrapped_mean, veh.phase.theta_rad);
    }
    leader_beacons.push_back(veh.phase.beacon_rad);

    const double horizon = arrival_time(veh.phase, omega);
    if (horizon < dt) {
      // Too close to the crossing to re-pose the problem: hold the last plan.
      veh.last_u = veh.has_plan ? plan_input_at(veh.committed, veh.plan_age_s) : 0.0;
      leader = &veh;
      continue;
    }

    // Far-future arrivals are tracked against the drifting consensus
    // reference rather than posed over the whole horizon; the capped problem
    // pins the vehicle onto the same reference trajectory.
    const double nominal = net_.segment(veh.segment).nominal_speed_mps;
    const double effective_horizon = std::min(horizon, params_.plan_horizon_cap_s);
    PlanningProblem problem;
    problem.s0_m = veh.s;
    problem.v0_mps = veh.v;
    problem.a0_mps2 = veh.a;
    problem.horizon_s = effective_horizon;
    problem.terminal_position_m = -(horizon - effective_horizon) * nominal;
    problem.terminal_speed_mps = nominal;
    problem.bounds = params_.bounds;
    if (leader != nullptr && leader->has_plan) {
      const Plan* path = &leader->committed;
      const double age = leader->plan_age_s;
      problem.leader = [path, age](double tau) { return path->position(age + tau); };
    } else if (leader != nullptr) {
      const double ls = leader->s;
      const double lv = leader->v;
      problem.leader = [ls, lv](double tau) { return ls + lv * tau; };
    }

    const double knot_dt = std::max(params_.qp_knot_dt_s, effective_horizon / 240.0);
    const PlanStepResult result = plan_step(problem, dt, knot_dt, params_.transcription);
    if (result.emergency) {
      if (!problem.leader && veh.has_plan) {
        // Membership churn can momentarily demand an unreachable slot. With no
        // vehicle ahead there is nothing to hit: keep the committed schedule
        // instead of braking out of it.
        veh.last_u = plan_input_at(veh.committed, veh.plan_age_s);
        leader = &veh;
        continue;
      }
      ++emergency_events_;
      veh.committed.kind = Plan::Kind::kDiscrete;
      veh.committed.discrete =
          make_braking_profile(veh.s, veh.v, veh.a, effective_horizon, params_.bounds, dt);
      veh.committed.terminal_speed_mps = params_.bounds.v_min_mps;
      veh.has_plan = true;
      veh.plan_age_s = 0.0;
      veh.last_u = veh.committed.discrete.first_input();
    } else {
      if (result.used_qp) ++qp_solves_;
      veh.committed = result.plan;
      veh.has_plan = true;
      veh.plan_age_s = 0.0;
      veh.last_u = result.first_input_mps3;
    }
    leader = &veh;
  }
}

void Engine::integrate_and_log() {
  const auto ids = active_sorted_by_id();
  const double dt = params_.kuramoto.dt_s;

#pragma omp parallel for schedule(static) if (params_.exec == Exec::kParallel)
  for (std::ptrdiff_t idx = 0; idx < static_cast<std::ptrdiff_t>(ids.size()); ++idx) {
    Vehicle& veh = vehicles_[ids[idx]];
    veh.phase.theta_rad =
        kuramoto_step(veh.phase.theta_rad, veh.phase.beacon_rad, last_order_,
                      params_.kuramoto);
    const double v_old = veh.v;
    const double a_old = veh.a;
    veh.s += dt * v_old;
    veh.v += dt * a_old;
    veh.a += dt * veh.last_u;
    veh.v = std::clamp(veh.v, params_.bounds.v_min_mps, params_.bounds.v_max_mps);
    veh.a = std::clamp(veh.a, params_.bounds.a_min_mps2, params_.bounds.a_max_mps2);
    veh.energy.add_interval(v_old, veh.v, dt);
    veh.plan_age_s += dt;
  }
}

void Engine::record_crossing(const Vehicle& veh, int intersection, double cross_time) {
  const auto& inter = net_.intersection(intersection);
  const double conflict_distance = inter.conflict_distance_m.at(veh.segment);
  CrossingEvent event;
  event.vehicle_id = veh.id;
  event.segment_id = veh.segment;
  event.intersection_id = intersection;
  event.conflict_time_s = cross_time + conflict_distance / std::max(veh.v, 0.5);
  crossing_events_.push_back(event);
  ++safety_.straight_crossings;

  auto& list = recent_crossings_[intersection];
  auto pos = list.end();
  while (pos != list.begin() && (pos - 1)->conflict_time_s > event.conflict_time_s) --pos;
  pos = list.insert(pos, event);
  const double threshold = params_.conflict_clearance_s - params_.audit_slack_s;
  auto check_pair = [&](const CrossingEvent& a, const CrossingEvent& b) {
    if (a.segment_id == b.segment_id) return;
    const double separation = std::abs(a.conflict_time_s - b.conflict_time_s);
    if (separation < threshold) {
      safety_.conflict_flags.push_back(
          {intersection, a.vehicle_id, b.vehicle_id, separation});
    }
  };
  if (pos != list.begin()) check_pair(*(pos - 1), *pos);
  if (pos + 1 != list.end()) check_pair(*pos, *(pos + 1));
}

void Engine::retire(Vehicle& veh, double retire_time) {
  VehicleMetrics m;
  m.vehicle_id = veh.id;
  m.arrival_index = veh.arrival_index;
  m.completed = true;
  const auto& totals = veh.energy.totals();
  m.fuel_g = totals.fuel_g;
  m.brake_kj = totals.brake_kj;
  m.drag_kj = totals.drag_kj;
  m.rolling_kj = totals.rolling_kj;
  m.positive_kj = totals.positive_kj;
  m.kinetic_delta_kj = totals.kinetic_delta_kj;
  m.balance_residual_fraction = totals.balance_residual_fraction();
  m.distance_m = veh.route_len_m;
  m.travel_time_s = retire_time - veh.arrival_time_s;
  m.delay_s_per_m = delay_time_s_per_m(m.travel_time_s, m.distance_m,
                                       net_.segment(veh.segment).nominal_speed_mps);
  completed_.push_back(m);
  active_[veh.id] = 0;
}

void Engine::process_transitions() {
  for (const int id : active_sorted_by_id()) {
    Vehicle& veh = vehicles_[id];
    while (active_[id] && veh.s >= 0.0) {
      const auto& seg = net_.segment(veh.segment);
      const double overshoot = veh.s;
      const double cross_time = time_s_ - overshoot / std::max(veh.v, 0.5);
      if (seg.exits_network()) {
        retire(veh, time_s_);
        break;
      }
      const int intersection = *seg.downstream_intersection;
      const auto& inter = net_.intersection(intersection);
      const Movement move = (veh.next_move < veh.route.size()) ? veh.route[veh.next_move]
                                                               : Movement::kStraight;
      ++veh.next_move;
      if (move == Movement::kStraight) {
        record_crossing(veh, intersection, cross_time);
      }
      const int next = (move == Movement::kStraight) ? seg.straight_successor.value()
                                                     : seg.turn_successor.value();
      const double passage = (move == Movement::kStraight) ? inter.box_length_m
                                                           : inter.right_turn_arc_m;
      const auto& dest = net_.segment(next);
      veh.segment = next;
      veh.s = overshoot - (passage + dest.length_m);
      veh.phase.theta_rad = position_to_phase(dest, veh.s);
      veh.phase.crossing_phase_rad = position_to_phase(dest, 0.0);
      const double wrapped_mean = wrap_to_pi(mean_phase_unwrapped_rad_);
      std::vector<double> leader_beacons;
      for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        if (active_[i] && static_cast<int>(i) != id && vehicles_[i].segment == next &&
            vehicles_[i].s > veh.s) {
          leader_beacons.push_back(vehicles_[i].phase.beacon_rad);
        }
      }
      veh.phase.theta_rad = spacing_reset(veh.phase.theta_rad, leader_beacons,
                                          params_.kuramoto.reset_margin_rad);
      veh.phase.beacon_rad = project_mean_phase(wrapped_mean, veh.phase.theta_rad);
      veh.has_plan = false;
      veh.plan_age_s = 0.0;
    }
  }
}

void Engine::audit_gaps() {
  for (const auto& seg : net_.segments) {
    const auto order = segment_order(seg.id);
    for (std::size_t k = 1; k < order.size(); ++k) {
      const Vehicle& lead = vehicles_[order[k - 1]];
      const Vehicle& follow = vehicles_[order[k]];
      const double gap = lead.s - follow.s;
      if (gap < params_.bounds.min_gap_m - 0.1) {
        safety_.gap_flags.push_back({time_s_, seg.id, lead.id, follow.id, gap});
      }
    }
  }
}

void Engine::step() {
  spawn_due_arrivals();

  const auto ids = active_sorted_by_id();
  if (ids.empty()) {
    mean_phase_unwrapped_rad_ +=
        params_.kuramoto.dt_s * params_.kuramoto.natural_frequency_rad_s;
    time_s_ += params_.kuramoto.dt_s;
    return;
  }

  std::vector<double> phases;
  phases.reserve(ids.size());
  for (const int id : ids) phases.push_back(vehicles_[id].phase.theta_rad);
  last_order_ = order_parameter(phases, params_.exec);
  if (last_order_.coherence >= kDegenerateCoherence) {
    mean_phase_unwrapped_rad_ +=
        wrap_to_pi(last_order_.mean_phase_rad - wrap_to_pi(mean_phase_unwrapped_rad_));
  } else {
    // No usable centroid direction: coast the consensus clock at the shared
    // natural rate so arrival predictions keep counting down.
    mean_phase_unwrapped_rad_ +=
        params_.kuramoto.dt_s * params_.kuramoto.natural_frequency_rad_s;
  }

  std::vector<std::vector<int>> chains;
  chains.reserve(net_.segments.size());
  for (const auto& seg : net_.segments) {
    auto order = segment_order(seg.id);
    if (!order.empty()) chains.push_back(std::move(order));
  }
#pragma omp parallel for schedule(dynamic) if (params_.exec == Exec::kParallel)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chains.size()); ++c) {
    plan_segment(chains[c]);
  }

  integrate_and_log();
  time_s_ += params_.kuramoto.dt_s;
  process_transitions();
  audit_gaps();

  if (log_sink_) {
    for (const int id : active_sorted_by_id()) {
      const Vehicle& veh = vehicles_[id];
      log_sink_({time_s_, veh.id, veh.segment, veh.s, veh.v, veh.a, veh.last_u,
                 veh.phase.theta_rad, veh.phase.beacon_rad});
    }
  }
}

void Engine::run(double horizon_s, bool drain, double drain_timeout_s) {
  while (time_s_ < horizon_s - 1e-9) step();
  if (!drain) return;
  const double deadline = horizon_s + drain_timeout_s;
  auto pending = [this] {
    if (next_arrival_ < arrivals_.size()) return true;
    for (const auto& [entry, queue] : entry_queues_) {
      if (!queue.empty()) return true;
    }
    return active_count() > 0;
  };
  while (pending() && time_s_ < deadline - 1e-9) step();
}

std::vector<VehicleMetrics> Engine::all_metrics() const {
  std::vector<VehicleMetrics> all = completed_;
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    if (!active_[i]) continue;
    const Vehicle& veh = vehicles_[i];
    VehicleMetrics m;
    m.vehicle_id = veh.id;
    m.arrival_index = veh.arrival_index;
    m.completed = false;
    const auto& totals = veh.energy.totals();
    m.fuel_g = totals.fuel_g;
    m.brake_kj = totals.brake_kj;
    m.drag_kj = totals.drag_kj;
    m.rolling_kj = totals.rolling_kj;
    m.positive_kj = totals.positive_kj;
    m.kinetic_delta_kj = totals.kinetic_delta_kj;
    m.balance_residual_fraction = totals.balance_residual_fraction();
    m.distance_m = veh.route_len_m;
    m.travel_time_s = time_s_ - veh.arrival_time_s;
    all.push_back(m);
  }
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.vehicle_id < b.vehicle_id; });
  return all;
}

std::vector<Engine::VehicleView> Engine::snapshot() const {
  std::vector<VehicleView> views;
  for (const int id : active_sorted_by_id()) {
    const Vehicle& veh = vehicles_[id];
    views.push_back({veh.id, veh.segment, veh.s, veh.v, veh.a, veh.phase.theta_rad,
                     veh.phase.beacon_rad});
  }
  return views;
}

}  // namespace synctraffic
