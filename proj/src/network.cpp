// SPDX-License-Identifier: Apache-2.0
#include "synctraffic/network.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace synctraffic {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kOffsetTol = 1e-9;      // design-time constraint tolerance
constexpr double kFrequencyTol = 1e-12;  // per-segment frequency consistency
}  // namespace

double wrap_to_pi(double angle_rad) {
  double a = std::fmod(angle_rad, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

double wrap_to_two_pi(double angle_rad) {
  double a = std::fmod(angle_rad, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

double phase_to_position(const RoadSegment& seg, double theta_rad) {
  return (theta_rad - seg.offset_rad) * seg.wavelength_m / kTwoPi;
}

double position_to_phase(const RoadSegment& seg, double s_m) {
  return seg.offset_rad + kTwoPi * s_m / seg.wavelength_m;
}

double natural_frequency(double nominal_speed_mps, double wavelength_m) {
  if (wavelength_m <= 0.0) {
    throw std::invalid_argument("natural_frequency: wavelength must be positive");
  }
  return kTwoPi * nominal_speed_mps / wavelength_m;
}

ConstraintCheck validate_servicing(const IntersectionGeometry& inter,
                                   const RoadSegment& incoming_a,
                                   const RoadSegment& incoming_b) {
  const double da = inter.conflict_distance_m.at(incoming_a.id);
  const double db = inter.conflict_distance_m.at(incoming_b.id);
  // Conflicting offsets must place the conflict point half a cycle apart.
  const double required = kTwoPi * (da / incoming_a.wavelength_m - db / incoming_b.wavelength_m) -
                          std::numbers::pi;
  const double actual = incoming_b.offset_rad - incoming_a.offset_rad;
  ConstraintCheck check;
  check.residual_rad = wrap_to_pi(actual - required);
  check.pass = std::abs(check.residual_rad) <= kOffsetTol;
  std::ostringstream oss;
  oss << "servicing at intersection " << inter.id << " (segments " << incoming_a.id << ","
      << incoming_b.id << ")";
  check.what = oss.str();
  return check;
}

ConstraintCheck validate_continuity(const RoadSegment& upstream,
                                    const RoadSegment& downstream,
                                    const IntersectionGeometry& inter) {
  // A straight hop spans the box plus the downstream segment before the next
  // entry; the wrapped phase must be unchanged across it.
  const double required =
      -kTwoPi / downstream.wavelength_m * (downstream.length_m + inter.box_length_m);
  const double actual = downstream.offset_rad - upstream.offset_rad;
  ConstraintCheck check;
  check.residual_rad = wrap_to_pi(actual - required);
  check.pass = std::abs(check.residual_rad) <= kOffsetTol;
  std::ostringstream oss;
  oss << "continuity " << upstream.id << " -> " << downstream.id << " at intersection "
      << inter.id;
  check.what = oss.str();
  return check;
}

const RoadSegment& NetworkConfig::segment(int id) const {
  for (const auto& s : segments) {
    if (s.id == id) return s;
  }
  throw std::out_of_range("unknown segment id " + std::to_string(id));
}

const IntersectionGeometry& NetworkConfig::intersection(int id) const {
  for (const auto& i : intersections) {
    if (i.id == id) return i;
  }
  throw std::out_of_range("unknown intersection id " + std::to_string(id));
}

std::vector<int> NetworkConfig::entry_segment_ids() const {
  std::vector<int> ids;
  for (const auto& s : segments) {
    if (s.entry_point) ids.push_back(s.id);
  }
  return ids;
}

std::vector<int> NetworkConfig::incoming_segments(int intersection_id) const {
  std::vector<int> ids;
  for (const auto& s : segments) {
    if (s.downstream_intersection && *s.downstream_intersection == intersection_id) {
      ids.push_back(s.id);
    }
  }
  return ids;
}

bool NetworkValidationReport::all_pass() const {
  for (const auto& c : frequency) {
    if (!c.pass) return false;
  }
  for (const auto& c : servicing) {
    if (!c.pass) return false;
  }
  for (const auto& c : continuity) {
    if (!c.pass) return false;
  }
  return true;
}

NetworkValidationReport NetworkConfig::validate() const {
  NetworkValidationReport report;
  for (const auto& seg : segments) {
    ConstraintCheck check;
    check.residual_rad = natural_frequency(seg.nominal_speed_mps, seg.wavelength_m) -
                         natural_frequency_rad_s;
    check.pass = std::abs(check.residual_rad) <= kFrequencyTol;
    check.what = "frequency consistency of segment " + std::to_string(seg.id);
    report.frequency.push_back(check);
  }
  for (const auto& inter : intersections) {
    const auto incoming = incoming_segments(inter.id);
    if (incoming.size() == 2) {
      report.servicing.push_back(
          validate_servicing(inter, segment(incoming[0]), segment(incoming[1])));
    }
    for (int id : incoming) {
      const auto& up = segment(id);
      if (up.straight_successor) {
        report.continuity.push_back(validate_continuity(up, segment(*up.straight_successor), inter));
      }
    }
  }
  return report;
}

NetworkConfig build_grid_network(const GridParams& p) {
  if (p.rows < 1 || p.cols < 1) {
    throw std::invalid_argument("build_grid_network: grid must be at least 1x1");
  }
  if (p.segment_length_m <= 0.0 || p.box_length_m <= 0.0 || p.entry_length_m <= 0.0 ||
      p.wavelength_m <= 0.0 || p.nominal_speed_mps <= 0.0) {
    throw std::invalid_argument("build_grid_network: lengths and speeds must be positive");
  }
  std::ostringstream problems;
  const double hop = p.segment_length_m + p.box_length_m;
  const double entry_hop = p.entry_length_m + p.box_length_m;
  auto is_multiple = [&](double len) {
    const double ratio = len / p.wavelength_m;
    return std::abs(ratio - std::round(ratio)) < 1e-9;
  };
  if (!is_multiple(hop)) {
    problems << "segment+box span " << hop << " m is not a multiple of wavelength "
             << p.wavelength_m << " m; ";
  }
  if (!is_multiple(entry_hop)) {
    problems << "entry+box span " << entry_hop << " m is not a multiple of wavelength "
             << p.wavelength_m << " m; ";
  }
  if (!problems.str().empty()) {
    throw std::invalid_argument("build_grid_network: " + problems.str());
  }

  NetworkConfig net;
  net.natural_frequency_rad_s = natural_frequency(p.nominal_speed_mps, p.wavelength_m);

  // Segment ids: horizontal road i contributes cols+1 segments (entry,
  // interior..., exit); vertical road j likewise. Intersection (i,j) has id
  // i*cols + j.
  const int h_per_road = p.cols + 1;
  const int v_per_road = p.rows + 1;
  auto h_id = [&](int road, int k) { return road * h_per_road + k; };
  auto v_id = [&](int road, int k) { return p.rows * h_per_road + road * v_per_road + k; };
  auto inter_id = [&](int i, int j) { return i * p.cols + j; };

  auto make_segment = [&](int id, int k, int per_road, double offset) {
    RoadSegment seg;
    seg.id = id;
    seg.entry_point = (k == 0);
    seg.length_m = (k == 0) ? p.entry_length_m : p.segment_length_m;
    seg.wavelength_m = p.wavelength_m;
    seg.offset_rad = wrap_to_two_pi(offset);
    seg.nominal_speed_mps = p.nominal_speed_mps;
    return seg;
  };

  for (int i = 0; i < p.rows; ++i) {
    for (int k = 0; k < h_per_road; ++k) {
      RoadSegment seg = make_segment(h_id(i, k), k, h_per_road, p.offset_horizontal_rad);
      if (k < p.cols) {
        seg.downstream_intersection = inter_id(i, k);
        seg.straight_successor = h_id(i, k + 1);
        // Right turn from eastbound joins the southbound road below (i,k).
        seg.turn_successor = v_id(k, i + 1);
      }
      net.segments.push_back(seg);
    }
  }
  for (int j = 0; j < p.cols; ++j) {
    for (int k = 0; k < v_per_road; ++k) {
      RoadSegment seg = make_segment(v_id(j, k), k, v_per_road, p.offset_vertical_rad);
      if (k < p.rows) {
        seg.downstream_intersection = inter_id(k, j);
        seg.straight_successor = v_id(j, k + 1);
        // Southbound right turn would need a westbound road; none exists.
      }
      net.segments.push_back(seg);
    }
  }

  for (int i = 0; i < p.rows; ++i) {
    for (int j = 0; j < p.cols; ++j) {
      IntersectionGeometry inter;
      inter.id = inter_id(i, j);
      inter.box_length_m = p.box_length_m;
      inter.right_turn_arc_m = std::numbers::pi * p.box_length_m / 4.0;
      // Conflict point sits at the box center for both flows.
      inter.conflict_distance_m[h_id(i, j)] = p.box_length_m / 2.0;
      inter.conflict_distance_m[v_id(j, i)] = p.box_length_m / 2.0;
      net.intersections.push_back(inter);
    }
  }

  const auto report = net.validate();
  if (!report.all_pass()) {
    std::ostringstream oss;
    oss << "build_grid_network: offset constraints failed:";
    auto dump = [&](const std::vector<ConstraintCheck>& checks) {
      for (const auto& c : checks) {
        if (!c.pass) oss << " [" << c.what << " residual " << c.residual_rad << "]";
      }
    };
    dump(report.frequency);
    dump(report.servicing);
    dump(report.continuity);
    throw std::invalid_argument(oss.str());
  }
  return net;
}

}  // namespace synctraffic
