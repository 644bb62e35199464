// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "synctraffic/network.hpp"

using namespace synctraffic;
using std::numbers::pi;

namespace {

RoadSegment make_segment(double wavelength, double offset, double length = 90.0,
                         double speed = 10.0) {
  RoadSegment seg;
  seg.id = 0;
  seg.length_m = length;
  seg.wavelength_m = wavelength;
  seg.offset_rad = offset;
  seg.nominal_speed_mps = speed;
  return seg;
}

}  // namespace

TEST_CASE("phase to position at the mapping origin") {
  const auto seg = make_segment(20.0, 0.0);
  CHECK(phase_to_position(seg, 0.0) == doctest::Approx(0.0));
  // One full cycle advances exactly one wavelength.
  CHECK(phase_to_position(seg, 2.0 * pi) == doctest::Approx(20.0));
  CHECK(phase_to_position(seg, 2.0 * pi) - phase_to_position(seg, 0.0) ==
        doctest::Approx(20.0));
}

TEST_CASE("phase to position with a half-cycle offset") {
  const auto seg = make_segment(20.0, pi);
  CHECK(phase_to_position(seg, 0.0) == doctest::Approx(-10.0));
}

TEST_CASE("position to phase") {
  CHECK(position_to_phase(make_segment(20.0, 0.0), 0.0) == doctest::Approx(0.0));
  CHECK(position_to_phase(make_segment(20.0, pi), -100.0) == doctest::Approx(pi - 10.0 * pi));
  CHECK(position_to_phase(make_segment(20.0, 0.0), -190.0) == doctest::Approx(-19.0 * pi));
}

TEST_CASE("mapping round trip is exact to 1e-12") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> theta_dist(-60.0, 60.0);
  std::uniform_real_distribution<double> lambda_dist(5.0, 80.0);
  std::uniform_real_distribution<double> offset_dist(0.0, 2.0 * pi);
  for (int i = 0; i < 200; ++i) {
    const auto seg = make_segment(lambda_dist(rng), offset_dist(rng));
    const double theta = theta_dist(rng);
    CHECK(position_to_phase(seg, phase_to_position(seg, theta)) ==
          doctest::Approx(theta));
    CHECK(std::abs(position_to_phase(seg, phase_to_position(seg, theta)) - theta) < 1e-12);
  }
}

TEST_CASE("full cycles map to whole wavelengths") {
  const auto seg = make_segment(20.0, 1.234);
  for (int k = -3; k <= 3; ++k) {
    const double diff =
        phase_to_position(seg, 0.7 + 2.0 * pi * k) - phase_to_position(seg, 0.7);
    CHECK(diff == doctest::Approx(20.0 * k));
  }
}

TEST_CASE("natural frequency") {
  CHECK(natural_frequency(10.0, 20.0) == doctest::Approx(pi));
  CHECK(natural_frequency(20.0, 40.0) == doctest::Approx(pi));
  CHECK(natural_frequency(15.0, 20.0) == doctest::Approx(1.5 * pi));
  CHECK_THROWS_AS(natural_frequency(10.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(natural_frequency(10.0, -5.0), std::invalid_argument);
}

TEST_CASE("servicing check accepts half-cycle-separated conflicting offsets") {
  IntersectionGeometry inter;
  inter.id = 0;
  inter.box_length_m = 10.0;
  auto a = make_segment(20.0, 0.0);
  a.id = 1;
  auto b = make_segment(20.0, pi);
  b.id = 2;
  inter.conflict_distance_m[1] = 5.0;
  inter.conflict_distance_m[2] = 5.0;

  const auto pass = validate_servicing(inter, a, b);
  CHECK(pass.pass);
  CHECK(std::abs(pass.residual_rad) < 1e-12);

  b.offset_rad = 0.0;
  const auto fail = validate_servicing(inter, a, b);
  CHECK_FALSE(fail.pass);
  CHECK(std::abs(fail.residual_rad) == doctest::Approx(pi));
}

TEST_CASE("servicing holds for any symmetric conflict geometry") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(1.0, 10.0);
  std::uniform_real_distribution<double> offset_dist(0.0, 2.0 * pi);
  for (int i = 0; i < 50; ++i) {
    IntersectionGeometry inter;
    inter.id = 0;
    inter.box_length_m = 20.0;
    const double conflict = dist(rng);
    auto a = make_segment(20.0, offset_dist(rng));
    a.id = 1;
    auto b = make_segment(20.0, wrap_to_two_pi(a.offset_rad + pi));
    b.id = 2;
    inter.conflict_distance_m[1] = conflict;
    inter.conflict_distance_m[2] = conflict;
    CHECK(validate_servicing(inter, a, b).pass);
  }
}

TEST_CASE("continuity check over a straight hop") {
  IntersectionGeometry inter;
  inter.id = 0;
  inter.box_length_m = 10.0;
  auto up = make_segment(20.0, 0.0);
  up.id = 1;
  auto down = make_segment(20.0, 0.0, 90.0);
  down.id = 2;
  inter.conflict_distance_m[1] = 5.0;

  const auto pass = validate_continuity(up, down, inter);
  CHECK(pass.pass);

  down.offset_rad = pi / 2.0;
  const auto fail = validate_continuity(up, down, inter);
  CHECK_FALSE(fail.pass);
  CHECK(std::abs(fail.residual_rad) == doctest::Approx(pi / 2.0));
}

TEST_CASE("continuity passes whenever the hop is a whole number of wavelengths") {
  IntersectionGeometry inter;
  inter.id = 0;
  inter.box_length_m = 10.0;
  for (int cycles = 1; cycles <= 6; ++cycles) {
    auto up = make_segment(20.0, 1.0);
    up.id = 1;
    auto down = make_segment(20.0, 1.0, cycles * 20.0 - 10.0);
    down.id = 2;
    CHECK(validate_continuity(up, down, inter).pass);
  }
}

TEST_CASE("grid network of nine intersections") {
  GridParams params;
  params.offset_vertical_rad = pi;
  const auto net = build_grid_network(params);
  CHECK(net.segments.size() == 24);
  CHECK(net.intersections.size() == 9);
  CHECK(net.entry_segment_ids().size() == 6);
  CHECK(net.natural_frequency_rad_s == doctest::Approx(pi));
  CHECK(net.validate().all_pass());

  // Every segment carries the network frequency.
  for (const auto& seg : net.segments) {
    CHECK(std::abs(natural_frequency(seg.nominal_speed_mps, seg.wavelength_m) -
                   net.natural_frequency_rad_s) < 1e-12);
  }
  // Every intersection sees exactly two incoming flows.
  for (const auto& inter : net.intersections) {
    CHECK(net.incoming_segments(inter.id).size() == 2);
  }
}

TEST_CASE("smallest grid") {
  GridParams params;
  params.rows = 1;
  params.cols = 1;
  params.offset_vertical_rad = pi;
  const auto net = build_grid_network(params);
  CHECK(net.segments.size() == 4);
  CHECK(net.intersections.size() == 1);
  CHECK(net.validate().all_pass());
}

TEST_CASE("grid construction rejects a misaligned wavelength") {
  GridParams params;
  params.wavelength_m = 30.0;
  params.offset_vertical_rad = pi;
  CHECK_THROWS_AS(build_grid_network(params), std::invalid_argument);
}

TEST_CASE("grid routes: eastbound turns join the southbound road") {
  GridParams params;
  params.offset_vertical_rad = pi;
  const auto net = build_grid_network(params);
  for (const auto& seg : net.segments) {
    if (seg.exits_network()) {
      CHECK_FALSE(seg.straight_successor.has_value());
      continue;
    }
    REQUIRE(seg.straight_successor.has_value());
    const auto& next = net.segment(*seg.straight_successor);
    CHECK(next.offset_rad == seg.offset_rad);
    if (seg.turn_successor) {
      const auto& turned = net.segment(*seg.turn_successor);
      CHECK(turned.offset_rad != seg.offset_rad);
    }
  }
}
