// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "synctraffic/parallel.hpp"

namespace synctraffic {

struct OrderParameter {
  double coherence = 0.0;      // r in [0, 1]
  double mean_phase_rad = 0.0; // psi in (-pi, pi]
};

struct KuramotoParams {
  double coupling_gain = 2.0;      // rad/s of pull at full coherence
  double natural_frequency_rad_s = 0.0;
  double reset_margin_rad = 1e-3;  // epsilon pushed past the half-cycle bound
  double dt_s = 0.1;
};

// Unwrapped per-vehicle phase bookkeeping. theta lives on the real line
// (anchored when the vehicle enters a segment); beacon is the projection of
// the network mean phase nearest theta; crossing phase is the unwrapped value
// at which the vehicle's mapped position reaches the intersection entry.
struct PhaseState {
  double theta_rad = 0.0;
  double beacon_rad = 0.0;
  double crossing_phase_rad = 0.0;
};

// Complex centroid of the oscillator population. Coherence r is the centroid
// magnitude, mean phase its argument; a centroid shorter than 1e-9 has no
// usable direction and reports mean phase 0. Throws on an empty population.
// The parallel path sums fixed-size chunks and reduces them in index order,
// so results are bitwise identical to the serial path.
OrderParameter order_parameter(std::span<const double> phases_rad, Exec exec = Exec::kSerial);

// Nearest unwrapped copy of the mean phase: mean + 2k*pi with
// |result - theta| <= pi; exact half-cycle ties resolve to the smaller k.
double project_mean_phase(double mean_phase_rad, double theta_rad);

// Spacing saturation: cap theta a half cycle (plus margin) below every
// leader's beacon so no two same-segment vehicles share one.
double spacing_reset(double theta_rad, std::span<const double> leader_beacons_rad,
                     double reset_margin_rad);

// One explicit-Euler phase update: natural drift plus coherence-weighted pull
// toward the vehicle's beacon.
double kuramoto_step(double theta_rad, double beacon_rad, const OrderParameter& order,
                     const KuramotoParams& params);

// Seconds until the beacon reaches the crossing phase at the natural rate.
double arrival_time(const PhaseState& state, double natural_frequency_rad_s);

}  // namespace synctraffic
