#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "swarm/fmp.hpp"
#include "swarm/geometry.hpp"
#include "swarm/rng.hpp"

using namespace swarm;

namespace {

NeighborObservation<2> neighbor2(double dist, double bearing) {
  NeighborObservation<2> nb;
  nb.distance = dist;
  nb.bearing = bearing;
  nb.true_distance = dist;
  nb.agent = 1;
  return nb;
}

double wrap_angle(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

// Net radial force for two agents approaching a shared goal from opposite
// sides, each at distance x from it. Positive pulls inward.
double net_inward(double x, const FmpParams& p) {
  const double sep = 2.0 * x;
  double f = p.attraction_gain;
  if (sep < p.repulsion_range) f -= p.repulsion_gain * (1.0 / sep - 1.0 / p.repulsion_range);
  return f;
}

}  // namespace

TEST_CASE("attraction is constant-magnitude toward the goal") {
  FmpParams p;
  const std::vector<NeighborObservation<2>> none;
  for (double d : {0.5, 3.0, 50.0}) {
    const Vec2 v = fmp_velocity(none, Vec2(d, 0.0), p);
    CHECK(v.x() == doctest::Approx(p.attraction_gain).epsilon(1e-12));
    CHECK(std::abs(v.y()) < 1e-12);
  }
  CHECK(fmp_velocity(none, Vec2(Vec2::Zero()), p).norm() < 1e-12);
}

TEST_CASE("rotation equivariance") {
  FmpParams p;
  Rng rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const double alpha = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const Eigen::Matrix2d rot = rotation_matrix(alpha);

    std::vector<NeighborObservation<2>> nbs, nbs_rot;
    const int n = 1 + static_cast<int>(rng.below(3));
    for (int i = 0; i < n; ++i) {
      const double d = rng.uniform(0.5, 12.0);
      const double b = rng.uniform(-std::numbers::pi, std::numbers::pi);
      nbs.push_back(neighbor2(d, b));
      nbs_rot.push_back(neighbor2(d, wrap_angle(b + alpha)));
    }
    const Vec2 goal(rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0));

    const Vec2 v = fmp_velocity(nbs, goal, p);
    const Vec2 v_rot = fmp_velocity(nbs_rot, Vec2(rot * goal), p);
    CHECK((v_rot - rot * v).norm() < 1e-9);
  }
}

TEST_CASE("head-on standoff distance matches the closed form") {
  FmpParams p;
  // Attraction g_a balances repulsion g_r (1/d - 1/range) at
  // d* = 1 / (g_a / g_r + 1 / range), which is 8 m at the defaults.
  const double d_star = 1.0 / (p.attraction_gain / p.repulsion_gain + 1.0 / p.repulsion_range);
  CHECK(d_star == doctest::Approx(8.0).epsilon(1e-12));

  std::vector<NeighborObservation<2>> nbs{neighbor2(d_star, 0.0)};
  const Vec2 v = fmp_velocity(nbs, Vec2(100.0, 0.0), p);
  CHECK(v.norm() < 1e-9);

  // Bisection on the symmetric shared-goal configuration as an independent
  // oracle for the standoff radius.
  double lo = 0.5, hi = 5.0;
  REQUIRE(net_inward(lo, p) < 0.0);
  REQUIRE(net_inward(hi, p) > 0.0);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (net_inward(mid, p) > 0.0 ? hi : lo) = mid;
  }
  const double standoff_radius = 0.5 * (lo + hi);
  CHECK(standoff_radius == doctest::Approx(0.5 * d_star).epsilon(1e-9));
  // The frozen pair parks outside the capture radius used by the scenarios.
  CHECK(standoff_radius > 3.5);
}

TEST_CASE("repulsion cutoff is exclusive at the range boundary") {
  FmpParams p;
  const Vec2 goal(100.0, 0.0);
  const Vec2 at_range = fmp_velocity({neighbor2(p.repulsion_range, 0.0)}, goal, p);
  CHECK(at_range.x() == doctest::Approx(p.attraction_gain).epsilon(1e-12));

  const Vec2 inside = fmp_velocity({neighbor2(p.repulsion_range - 1e-3, 0.0)}, goal, p);
  CHECK(inside.x() < p.attraction_gain);
}

TEST_CASE("speed clip preserves direction") {
  FmpParams p;
  std::vector<NeighborObservation<2>> nbs{neighbor2(0.1, std::numbers::pi / 2.0)};
  const Vec2 goal(100.0, 0.0);

  const Vec2 v = fmp_velocity(nbs, goal, p);
  CHECK(v.norm() == doctest::Approx(p.max_speed).epsilon(1e-12));

  FmpParams unbounded = p;
  unbounded.max_speed = 1e9;
  const Vec2 raw = fmp_velocity(nbs, goal, unbounded);
  CHECK((v.normalized() - raw.normalized()).norm() < 1e-12);
}

TEST_CASE("straight-line pursuit stops inside the capture radius") {
  const double capture = 3.5;
  CHECK(straight_line_velocity(Vec2(3.0, 0.0), 30.0, capture).norm() < 1e-12);
  CHECK(straight_line_velocity(Vec2(capture, 0.0), 30.0, capture).norm() < 1e-12);

  const Vec2 v = straight_line_velocity(Vec2(0.0, -9.0), 30.0, capture);
  CHECK(v.x() == 0.0);
  CHECK(v.y() == doctest::Approx(-30.0).epsilon(1e-12));
}

TEST_CASE("goal offset reconstruction round trip") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec2 off(rng.uniform(-40.0, 40.0), rng.uniform(-40.0, 40.0));
    RawObservation<2> raw;
    raw.goal_distance = off.norm();
    raw.goal_bearing = std::atan2(off.y(), off.x());
    CHECK((goal_offset_from_observation(raw) - off).norm() < 1e-9);
  }
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 off(rng.uniform(-40.0, 40.0), rng.uniform(-40.0, 40.0), rng.uniform(-20.0, 20.0));
    RawObservation<3> raw;
    raw.goal_distance = off.norm();
    raw.goal_bearing = std::atan2(off.y(), off.x());
    raw.goal_z_offset = off.z();
    CHECK((goal_offset_from_observation(raw) - off).norm() < 1e-9);
  }
}

TEST_CASE("parameter validation") {
  FmpParams p;
  p.repulsion_range = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = FmpParams{};
  p.attraction_gain = -2.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = FmpParams{};
  CHECK_NOTHROW(p.validate());
}
