// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace synctraffic {

// Position convention: s is signed arc length along the driving direction,
// s = 0 at the downstream intersection entry, s < 0 upstream of it. Phase
// increases with s, so a vehicle advancing at the nominal speed has a
// positive phase rate.

enum class Movement { kStraight, kRightTurn };

struct RoadSegment {
  int id = -1;
  double length_m = 0.0;           // segment origin is its intersection entry
  double wavelength_m = 0.0;       // road distance per full phase cycle
  double offset_rad = 0.0;         // phase value at the intersection entry, [0, 2pi)
  double nominal_speed_mps = 0.0;
  std::optional<int> downstream_intersection;  // empty: segment exits the network
  std::optional<int> straight_successor;
  std::optional<int> turn_successor;
  bool entry_point = false;

  bool exits_network() const { return !downstream_intersection.has_value(); }
};

struct IntersectionGeometry {
  int id = -1;
  double box_length_m = 0.0;               // straight passage through the box
  std::map<int, double> conflict_distance_m;  // incoming segment id -> entry-to-conflict-point distance
  double right_turn_arc_m = 0.0;           // turning path length through the box
};

struct ConstraintCheck {
  bool pass = false;
  double residual_rad = 0.0;  // wrapped to (-pi, pi]
  std::string what;
};

struct NetworkValidationReport {
  std::vector<ConstraintCheck> frequency;
  std::vector<ConstraintCheck> servicing;
  std::vector<ConstraintCheck> continuity;
  bool all_pass() const;
};

class NetworkConfig {
 public:
  std::vector<RoadSegment> segments;
  std::vector<IntersectionGeometry> intersections;
  double natural_frequency_rad_s = 0.0;

  const RoadSegment& segment(int id) const;
  const IntersectionGeometry& intersection(int id) const;
  std::vector<int> entry_segment_ids() const;
  // Incoming segment ids per intersection, horizontal flow first.
  std::vector<int> incoming_segments(int intersection_id) const;

  NetworkValidationReport validate() const;
};

// Affine phase<->position mapping of one segment.
double phase_to_position(const RoadSegment& seg, double theta_rad);
double position_to_phase(const RoadSegment& seg, double s_m);

// Common phase rate implied by a nominal speed and wavelength.
double natural_frequency(double nominal_speed_mps, double wavelength_m);

// Design-time offset checks. Servicing: the two conflicting flows must map the
// conflict point half a cycle apart. Continuity: a straight hop must leave the
// wrapped phase unchanged.
ConstraintCheck validate_servicing(const IntersectionGeometry& inter,
                                   const RoadSegment& incoming_a,
                                   const RoadSegment& incoming_b);
ConstraintCheck validate_continuity(const RoadSegment& upstream,
                                    const RoadSegment& downstream,
                                    const IntersectionGeometry& inter);

struct GridParams {
  int rows = 3;
  int cols = 3;
  double segment_length_m = 90.0;
  double box_length_m = 10.0;
  double entry_length_m = 190.0;
  double wavelength_m = 20.0;
  double nominal_speed_mps = 10.0;
  double offset_horizontal_rad = 0.0;
  double offset_vertical_rad = 0.0;  // default set by the scenario loader
};

// One-way grid: horizontal roads run west->east, vertical roads north->south.
// Right turns exist only for the eastbound flow. Throws std::invalid_argument
// when the geometry cannot satisfy the offset constraints.
NetworkConfig build_grid_network(const GridParams& params);

// Angle helpers shared across modules.
double wrap_to_pi(double angle_rad);      // (-pi, pi]
double wrap_to_two_pi(double angle_rad);  // [0, 2pi)

}  // namespace synctraffic
