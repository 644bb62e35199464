// SPDX-License-Identifier: Apache-2.0
#include "synctraffic/kuramoto.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace synctraffic {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDegenerateCoherence = 1e-9;
constexpr int kChunk = 1024;  // fixed summation grain, keeps parallel sums deterministic
}  // namespace

OrderParameter order_parameter(std::span<const double> phases_rad, Exec exec) {
  if (phases_rad.empty()) {
    throw std::invalid_argument("order_parameter: empty phase population");
  }
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(phases_rad.size());
  // Both paths accumulate per fixed-size chunk and reduce in chunk order, so
  // the summation tree is independent of the execution policy and thread
  // count.
  const std::ptrdiff_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> part_cos(chunks, 0.0), part_sin(chunks, 0.0);
  const bool parallel = (exec == Exec::kParallel && chunks > 1);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    double pc = 0.0, ps = 0.0;
    const std::ptrdiff_t hi = std::min(n, (c + 1) * kChunk);
    for (std::ptrdiff_t i = c * kChunk; i < hi; ++i) {
      pc += std::cos(phases_rad[i]);
      ps += std::sin(phases_rad[i]);
    }
    part_cos[c] = pc;
    part_sin[c] = ps;
  }
  double sum_cos = 0.0;
  double sum_sin = 0.0;
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    sum_cos += part_cos[c];
    sum_sin += part_sin[c];
  }
  const double re = sum_cos / static_cast<double>(n);
  const double im = sum_sin / static_cast<double>(n);
  OrderParameter order;
  order.coherence = std::hypot(re, im);
  order.mean_phase_rad = (order.coherence < kDegenerateCoherence) ? 0.0 : std::atan2(im, re);
  return order;
}

double project_mean_phase(double mean_phase_rad, double theta_rad) {
  const double d = theta_rad - mean_phase_rad;
  // The 1e-9 snap keeps the branch choice stable when theta sits a rounding
  // error away from the half-cycle boundary; exact ties go to the smaller k.
  const double k = std::ceil((d - std::numbers::pi) / kTwoPi - 1e-9);
  return mean_phase_rad + kTwoPi * k;
}

double spacing_reset(double theta_rad, std::span<const double> leader_beacons_rad,
                     double reset_margin_rad) {
  double theta = theta_rad;
  for (double beacon : leader_beacons_rad) {
    theta = std::min(theta, beacon - std::numbers::pi - reset_margin_rad);
  }
  return theta;
}

double kuramoto_step(double theta_rad, double beacon_rad, const OrderParameter& order,
                     const KuramotoParams& params) {
  const double pull =
      order.coherence * params.coupling_gain * std::sin(beacon_rad - theta_rad);
  return theta_rad + params.dt_s * (params.natural_frequency_rad_s + pull);
}

double arrival_time(const PhaseState& state, double natural_frequency_rad_s) {
  return (state.crossing_phase_rad - state.beacon_rad) / natural_frequency_rad_s;
}

}  // namespace synctraffic
