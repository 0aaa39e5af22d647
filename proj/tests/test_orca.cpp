#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "support/grid_oracle.hpp"
#include "swarm/fmp.hpp"
#include "swarm/geometry.hpp"
#include "swarm/orca.hpp"
#include "swarm/rng.hpp"

using namespace swarm;
using testsupport::constraint_margin;
using testsupport::coarse_interior_point;
using testsupport::grid_oracle_certified;
using testsupport::grid_search_velocity;
using testsupport::GridBest;

namespace {

NeighborObservation<2> neighbor2(double dist, double bearing, const Vec2& rel_vel) {
  NeighborObservation<2> nb;
  nb.distance = dist;
  nb.bearing = bearing;
  nb.rel_velocity = rel_vel;
  nb.true_distance = dist;
  nb.agent = 1;
  return nb;
}

// Geometry sampler shared by the oracle comparisons. Neighbor distances stay
// clear of the overlap branch, which has its own exactness test below.
struct SampledCase {
  std::vector<NeighborObservation<2>> neighbors;
  Vec2 own_velocity;
  Vec2 preferred;
};

SampledCase sample_case(Rng& rng, int neighbor_count) {
  SampledCase c;
  c.own_velocity = Vec2(rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0));
  const double ang = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const double mag = rng.uniform(0.0, 30.0);
  c.preferred = mag * Vec2(std::cos(ang), std::sin(ang));
  for (int i = 0; i < neighbor_count; ++i) {
    const double d = rng.uniform(2.2, 9.5);
    const double b = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const Vec2 rv(rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0));
    auto nb = neighbor2(d, b, rv);
    nb.agent = i + 1;
    c.neighbors.push_back(nb);
  }
  return c;
}

}  // namespace

TEST_CASE("no neighbors returns the clipped preferred velocity") {
  OrcaParams p;
  const std::vector<NeighborObservation<2>> none;

  const Vec2 inside(3.0, -4.0);
  auto r = orca_velocity(Vec2(1.0, 0.0), none, inside, p);
  CHECK(r.feasible);
  CHECK((r.velocity - inside).norm() <= 1e-12);

  const Vec2 outside(40.0, 30.0);
  auto r2 = orca_velocity(Vec2::Zero(), none, outside, p);
  CHECK(r2.feasible);
  CHECK(r2.velocity.norm() == doctest::Approx(p.max_speed).epsilon(1e-12));
  CHECK((r2.velocity - outside.normalized() * p.max_speed).norm() < 1e-9);
}

TEST_CASE("coincident neighbor reading carries no constraint") {
  OrcaParams p;
  std::vector<NeighborObservation<2>> nbs{neighbor2(0.0, 0.3, Vec2(1.0, 2.0))};
  const Vec2 pref(5.0, 5.0);
  auto r = orca_velocity(Vec2(1.0, 1.0), nbs, pref, p);
  CHECK(r.feasible);
  CHECK((r.velocity - pref).norm() < 1e-12);
}

TEST_CASE("solver output satisfies its own half-plane set") {
  OrcaParams p;
  Rng rng(91);
  int feasible_seen = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(3));
    SampledCase c = sample_case(rng, n);
    const auto planes = orca_halfplanes(c.own_velocity, c.neighbors, p);
    const auto res = orca_velocity(c.own_velocity, c.neighbors, c.preferred, p);
    REQUIRE(res.velocity.allFinite());
    CHECK(res.velocity.norm() <= p.max_speed + 1e-9);
    if (res.feasible) {
      ++feasible_seen;
      CHECK(constraint_margin(res.velocity, planes, p.max_speed) >= -1e-9);
    }
  }
  CHECK(feasible_seen > 100);
}

TEST_CASE("LP matches the grid-search oracle on feasible geometries") {
  OrcaParams p;
  Rng rng(417);
  int accepted = 0;
  int attempts = 0;
  while (accepted < 60 && attempts < 5000) {
    ++attempts;
    const int n = 1 + static_cast<int>(rng.below(3));
    SampledCase c = sample_case(rng, n);
    const auto planes = orca_halfplanes(c.own_velocity, c.neighbors, p);
    const auto res = orca_velocity(c.own_velocity, c.neighbors, c.preferred, p);
    if (!res.feasible) continue;
    if (!coarse_interior_point(planes, p.max_speed)) continue;
    GridBest oracle;
    if (!grid_oracle_certified(planes, c.preferred, p.max_speed, &oracle)) continue;
    ++accepted;

    REQUIRE(constraint_margin(res.velocity, planes, p.max_speed) >= -1e-9);
    const double d_solver = (res.velocity - c.preferred).norm();
    // Exact LP cannot beat the true optimum; the grid only overshoots it.
    CHECK(d_solver <= oracle.distance + 1e-9);
    CHECK(oracle.distance - d_solver <= 1e-3);
  }
  CHECK(accepted == 60);
}

TEST_CASE("overlapping discs produce the exact push-apart optimum") {
  OrcaParams p;  // combined radius 1.5, neighbor at 1.0 overlaps by 0.5
  std::vector<NeighborObservation<2>> nbs{neighbor2(1.0, 0.0, Vec2::Zero())};
  auto r = orca_velocity(Vec2::Zero(), nbs, Vec2::Zero(), p);
  CHECK(r.feasible);
  // Half of the separation speed (overlap / time_step) pointing away.
  const double want = -0.5 * (1.5 - 1.0) / p.time_step;
  CHECK(r.velocity.x() == doctest::Approx(want).epsilon(1e-9));
  CHECK(std::abs(r.velocity.y()) < 1e-9);
}

TEST_CASE("antipodal swap stays separated and completes") {
  OrcaParams p;
  p.agent_radius = 1.0;  // combined 2.0, comfortably above the 1.5 m threshold
  const double dt = p.time_step;
  const double capture = 0.5;

  Vec2 pos[2] = {Vec2(-5.0, 0.0), Vec2(5.0, 0.0)};
  Vec2 goal[2] = {Vec2(5.0, 0.0), Vec2(-5.0, 0.0)};
  Vec2 vel[2] = {Vec2::Zero(), Vec2::Zero()};

  double min_dist = (pos[0] - pos[1]).norm();
  bool done = false;
  for (int step = 0; step < 2000 && !done; ++step) {
    Vec2 next_vel[2];
    for (int i = 0; i < 2; ++i) {
      const int j = 1 - i;
      NeighborObservation<2> nb;
      nb.distance = (pos[j] - pos[i]).norm();
      nb.bearing = bearing<2>(pos[i], pos[j]);
      nb.rel_velocity = vel[j] - vel[i];
      nb.true_distance = nb.distance;
      nb.agent = j;
      const Vec2 pref = straight_line_velocity(Vec2(goal[i] - pos[i]), p.max_speed, capture);
      next_vel[i] = orca_velocity(vel[i], {nb}, pref, p).velocity;
    }
    for (int i = 0; i < 2; ++i) {
      vel[i] = next_vel[i];
      pos[i] += vel[i] * dt;
    }
    min_dist = std::min(min_dist, (pos[0] - pos[1]).norm());
    done = (pos[0] - goal[0]).norm() <= capture && (pos[1] - goal[1]).norm() <= capture;
  }

  CHECK(min_dist > 1.5);
  CHECK(done);
}

TEST_CASE("3D swap with a small vertical offset separates and completes") {
  OrcaParams p;
  p.agent_radius = 1.0;
  const double dt = p.time_step;
  const double capture = 0.5;

  Vec3 pos[2] = {Vec3(-5.0, 0.0, 0.1), Vec3(5.0, 0.0, -0.1)};
  Vec3 goal[2] = {Vec3(5.0, 0.0, 0.1), Vec3(-5.0, 0.0, -0.1)};
  Vec3 vel[2] = {Vec3::Zero(), Vec3::Zero()};

  double min_dist = (pos[0] - pos[1]).norm();
  bool done = false;
  for (int step = 0; step < 2000 && !done; ++step) {
    Vec3 next_vel[2];
    for (int i = 0; i < 2; ++i) {
      const int j = 1 - i;
      NeighborObservation<3> nb;
      const Vec3 rel = pos[j] - pos[i];
      nb.distance = rel.norm();
      nb.bearing = bearing<3>(pos[i], pos[j]);
      nb.rel_velocity = vel[j] - vel[i];
      nb.z_offset = rel.z();
      nb.true_distance = nb.distance;
      nb.agent = j;
      const Vec3 pref = straight_line_velocity(Vec3(goal[i] - pos[i]), p.max_speed, capture);
      next_vel[i] = orca_velocity(vel[i], {nb}, pref, p).velocity;
    }
    for (int i = 0; i < 2; ++i) {
      vel[i] = next_vel[i];
      pos[i] += vel[i] * dt;
    }
    min_dist = std::min(min_dist, (pos[0] - pos[1]).norm());
    done = (pos[0] - goal[0]).norm() <= capture && (pos[1] - goal[1]).norm() <= capture;
  }

  CHECK(min_dist > 1.5);
  CHECK(done);
}

TEST_CASE("3D with no neighbors passes the preferred velocity through") {
  OrcaParams p;
  const std::vector<NeighborObservation<3>> none;
  const Vec3 pref(2.0, -3.0, 4.0);
  auto r = orca_velocity(Vec3(1.0, 1.0, 1.0), none, pref, p);
  CHECK(r.feasible);
  CHECK((r.velocity - pref).norm() < 1e-12);
}

TEST_CASE("neighbor relative position reconstruction") {
  NeighborObservation<2> flat = neighbor2(5.0, std::numbers::pi / 2.0, Vec2::Zero());
  const Vec2 rel2 = neighbor_rel_position(flat);
  CHECK(std::abs(rel2.x()) <= 1e-12);
  CHECK(rel2.y() == doctest::Approx(5.0).epsilon(1e-12));

  NeighborObservation<3> tall;
  tall.distance = 5.0;
  tall.bearing = 0.0;
  tall.z_offset = 3.0;
  const Vec3 rel3 = neighbor_rel_position(tall);
  CHECK(rel3.x() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(std::abs(rel3.y()) < 1e-12);
  CHECK(rel3.z() == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("parameter validation") {
  OrcaParams p;
  p.time_horizon = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = OrcaParams{};
  p.agent_radius = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = OrcaParams{};
  CHECK_NOTHROW(p.validate());
}
