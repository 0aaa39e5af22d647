#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "swarm/scenario.hpp"

using namespace swarm;

TEST_CASE("formation change starts on the circle with antipodal goals") {
  ScenarioConfig cfg;
  cfg.agents = 4;
  Rng rng(0);
  const SwarmState<2> st = init_formation_change<2>(cfg, rng);
  REQUIRE(st.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(st.agents[i].position.norm() - cfg.circle_radius) <= 1e-9);
    CHECK(st.agents[i].goal == Vec2(-st.agents[i].position));
    CHECK(st.agents[i].velocity == Vec2::Zero());
    CHECK(st.agents[i].yaw == 0.0);
  }
  CHECK(st.agents[0].position.x() == cfg.circle_radius);
  CHECK(std::abs(st.agents[1].position.y() - cfg.circle_radius) <= 1e-9);
  CHECK(std::abs(st.agents[2].position.x() + cfg.circle_radius) <= 1e-9);
}

TEST_CASE("package delivery goals are uniform on the circle") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::package_delivery;
  cfg.agents = 100;
  Rng rng(2718);

  const int bins = 36;
  const int inits = 36;
  int count[36] = {0};
  for (int rep = 0; rep < inits; ++rep) {
    const SwarmState<2> st = init_package_delivery<2>(cfg, rng);
    for (const auto& a : st.agents) {
      CHECK(std::abs(a.goal.norm() - cfg.circle_radius) <= 1e-9);
      double ang = std::atan2(a.goal.y(), a.goal.x());
      if (ang < 0) ang += 2.0 * std::numbers::pi;
      int b = static_cast<int>(ang / (2.0 * std::numbers::pi) * bins);
      if (b == bins) b = 0;
      ++count[b];
    }
  }
  const double expected = double(cfg.agents * inits) / bins;
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double d = count[b] - expected;
    chi2 += d * d / expected;
  }
  // 0.01 critical value of chi-squared with 35 degrees of freedom.
  CHECK(chi2 < 57.342);
}

TEST_CASE("reward matches scalar arithmetic exactly") {
  ScenarioConfig cfg;
  cfg.agents = 8;
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    SwarmState<2> st;
    st.agents.resize(cfg.agents);
    for (auto& a : st.agents) {
      a.position << rng.uniform(-30, 30), rng.uniform(-30, 30);
      a.velocity << rng.uniform(-10, 10), rng.uniform(-10, 10);
      a.goal << rng.uniform(-30, 30), rng.uniform(-30, 30);
    }
    const auto recs = reward<2>(st, cfg);
    for (int i = 0; i < cfg.agents; ++i) {
      const auto& a = st.agents[i];
      int near = 0;
      for (int j = 0; j < cfg.agents; ++j) {
        if (j == i) continue;
        const double dx = st.agents[j].position.x() - a.position.x();
        const double dy = st.agents[j].position.y() - a.position.y();
        if (std::sqrt(dx * dx + dy * dy) <= cfg.avoid_radius) ++near;
      }
      const double progress = a.velocity.x() * (a.goal.x() - a.position.x()) +
                              a.velocity.y() * (a.goal.y() - a.position.y());
      CHECK(recs[i].reward == cfg.c_p * progress - cfg.c_c * near);
      CHECK(recs[i].proximity_count == near);
    }
  }
}

TEST_CASE("proximity penalty boundary is inclusive") {
  ScenarioConfig cfg;
  cfg.agents = 2;
  SwarmState<2> st;
  st.agents.resize(2);
  st.agents[1].position << cfg.avoid_radius, 0.0;
  CHECK(reward<2>(st, cfg)[0].proximity_count == 1);
  st.agents[1].position << cfg.avoid_radius + 1e-9, 0.0;
  CHECK(reward<2>(st, cfg)[0].proximity_count == 0);
}

TEST_CASE("package capture resamples the goal on the circle") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::package_delivery;
  cfg.agents = 3;
  Rng rng(5);
  SwarmState<2> st = init_package_delivery<2>(cfg, rng);
  st.agents[1].position = st.agents[1].goal;  // inside capture radius
  const Vec2 old_goal0 = st.agents[0].goal;
  st.agents[0].position = st.agents[0].goal + Vec2(cfg.capture_radius + 0.1, 0.0);

  const std::vector<int> collected = advance_goals<2>(st, cfg, rng);
  REQUIRE(collected.size() == 1);
  CHECK(collected[0] == 1);
  CHECK(std::abs(st.agents[1].goal.norm() - cfg.circle_radius) <= 1e-9);
  CHECK((st.agents[1].goal - st.agents[1].position).norm() > cfg.capture_radius);
  CHECK(st.agents[0].goal == old_goal0);
}

TEST_CASE("formation change never moves goals") {
  ScenarioConfig cfg;
  cfg.agents = 2;
  Rng rng(6);
  SwarmState<2> st = init_formation_change<2>(cfg, rng);
  st.agents[0].position = st.agents[0].goal;
  CHECK(advance_goals<2>(st, cfg, rng).empty());
  CHECK(st.agents[0].goal == Vec2(-cfg.circle_radius, 0.0) * 1.0);
}

TEST_CASE("episode termination rules") {
  ScenarioConfig cfg;
  cfg.agents = 2;
  cfg.horizon = 100;
  Rng rng(7);
  SwarmState<2> st = init_formation_change<2>(cfg, rng);

  CHECK_FALSE(episode_done<2>(st, cfg).done);
  st.step = 100;
  CHECK(episode_done<2>(st, cfg).done);

  st.step = 3;
  for (auto& a : st.agents) a.position = a.goal;
  const DoneFlags f = episode_done<2>(st, cfg);
  CHECK(f.done);
  CHECK(f.reached[0]);
  CHECK(f.reached[1]);

  // Package delivery only ends at the horizon.
  cfg.kind = ScenarioKind::package_delivery;
  CHECK_FALSE(episode_done<2>(st, cfg).done);
  st.step = 100;
  CHECK(episode_done<2>(st, cfg).done);
}

TEST_CASE("capture radius boundary counts as reached") {
  ScenarioConfig cfg;
  cfg.agents = 1;
  SwarmState<2> st;
  st.agents.resize(1);
  st.agents[0].goal << cfg.capture_radius, 0.0;
  CHECK(episode_done<2>(st, cfg).reached[0]);
  st.agents[0].goal << cfg.capture_radius + 1e-9, 0.0;
  CHECK_FALSE(episode_done<2>(st, cfg).reached[0]);
}

TEST_CASE("curriculum lookup picks the highest crossed threshold") {
  CurriculumSchedule s;
  s.entries = {{0, 4}, {1000, 6}, {5000, 8}};
  CHECK(curriculum_agent_count(s, 0) == 4);
  CHECK(curriculum_agent_count(s, 999) == 4);
  CHECK(curriculum_agent_count(s, 1000) == 6);
  CHECK(curriculum_agent_count(s, 4999) == 6);
  CHECK(curriculum_agent_count(s, 5000) == 8);
  CHECK(curriculum_agent_count(s, 1000000) == 8);
  CHECK_THROWS_AS(curriculum_agent_count(s, -1), std::invalid_argument);
}

TEST_CASE("curriculum validation rejects malformed schedules") {
  CurriculumSchedule s;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.entries = {{0, 4}, {0, 6}};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.entries = {{0, 6}, {10, 4}};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.entries = {{0, 4}, {10, 4}};
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("3D initialization stays in the z = 0 plane") {
  ScenarioConfig cfg;
  cfg.dimension = 3;
  cfg.agents = 5;
  Rng rng(8);
  const SwarmState<3> st = init_formation_change<3>(cfg, rng);
  for (const auto& a : st.agents) {
    CHECK(a.position.z() == 0.0);
    CHECK(a.goal.z() == 0.0);
    CHECK(std::abs(a.position.head<2>().norm() - cfg.circle_radius) <= 1e-9);
  }
}
