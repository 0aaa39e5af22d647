#pragma once

#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarm/dynamics.hpp"
#include "swarm/rng.hpp"

namespace swarm {

enum class ScenarioKind { formation_change, package_delivery };

inline std::string to_string(ScenarioKind k) {
  return k == ScenarioKind::formation_change ? "formation_change" : "package_delivery";
}

inline ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "formation_change") return ScenarioKind::formation_change;
  if (s == "package_delivery") return ScenarioKind::package_delivery;
  throw std::invalid_argument("unknown scenario kind: " + s);
}

// Episode construction parameters and reward constants.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::formation_change;
  int dimension = 2;  // 2 or 3
  int agents = 10;
  double circle_radius = 70.0;   // m
  double capture_radius = 3.5;   // m, goal reached / package collected below this
  double avoid_radius = 7.0;     // m, proximity penalty radius C
  double c_p = 0.3;              // s/m^2, progress coefficient
  double c_c = 1.0;              // per-neighbor proximity penalty
  int horizon = 1500;            // steps
  std::uint64_t seed = 0;

  void validate() const {
    if (dimension != 2 && dimension != 3)
      throw std::invalid_argument("ScenarioConfig: dimension must be 2 or 3");
    if (agents < 1) throw std::invalid_argument("ScenarioConfig: agents must be >= 1");
    if (circle_radius <= 0 || capture_radius <= 0 || avoid_radius < 0)
      throw std::invalid_argument("ScenarioConfig: radii must be positive");
    if (horizon < 1) throw std::invalid_argument("ScenarioConfig: horizon must be >= 1");
  }
};

struct RewardRecord {
  double reward = 0.0;
  int proximity_count = 0;  // neighbors within the avoidance radius this step
};

// Piecewise-constant agent-count schedule over training steps.
struct CurriculumSchedule {
  struct Entry {
    long step_threshold;
    int agents;
  };
  std::vector<Entry> entries;

  void validate() const {
    if (entries.empty())
      throw std::invalid_argument("CurriculumSchedule: schedule must not be empty");
    for (std::size_t i = 1; i < entries.size(); ++i) {
      if (entries[i].step_threshold <= entries[i - 1].step_threshold)
        throw std::invalid_argument("CurriculumSchedule: thresholds must strictly increase");
      if (entries[i].agents < entries[i - 1].agents)
        throw std::invalid_argument("CurriculumSchedule: agent counts must not decrease");
    }
  }
};

// Agent count of the highest threshold not exceeding training_step.
inline int curriculum_agent_count(const CurriculumSchedule& schedule, long training_step) {
  schedule.validate();
  if (training_step < schedule.entries.front().step_threshold)
    throw std::invalid_argument("curriculum_agent_count: step precedes the first threshold");
  int n = schedule.entries.front().agents;
  for (const auto& e : schedule.entries)
    if (e.step_threshold <= training_step) n = e.agents;
  return n;
}

namespace detail {
template <int Dim>
Vec<Dim> on_circle(double radius, double angle) {
  Vec<Dim> p = Vec<Dim>::Zero();
  p.x() = radius * std::cos(angle);
  p.y() = radius * std::sin(angle);
  return p;
}
}  // namespace detail

// Agents evenly spaced on the circle, goals at the antipodal points.
// Velocities, yaw and yaw rates start at zero.
template <int Dim>
SwarmState<Dim> init_formation_change(const ScenarioConfig& cfg, Rng&) {
  cfg.validate();
  SwarmState<Dim> state;
  state.agents.resize(cfg.agents);
  for (int i = 0; i < cfg.agents; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / cfg.agents;
    state.agents[i].position = detail::on_circle<Dim>(cfg.circle_radius, angle);
    state.agents[i].goal = -state.agents[i].position;
  }
  return state;
}

// Agents evenly spaced on the circle, goals drawn uniformly on the circle.
template <int Dim>
SwarmState<Dim> init_package_delivery(const ScenarioConfig& cfg, Rng& rng) {
  cfg.validate();
  SwarmState<Dim> state;
  state.agents.resize(cfg.agents);
  for (int i = 0; i < cfg.agents; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / cfg.agents;
    state.agents[i].position = detail::on_circle<Dim>(cfg.circle_radius, angle);
    const double goal_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    state.agents[i].goal = detail::on_circle<Dim>(cfg.circle_radius, goal_angle);
  }
  return state;
}

template <int Dim>
SwarmState<Dim> init_scenario(const ScenarioConfig& cfg, Rng& rng) {
  return cfg.kind == ScenarioKind::formation_change ? init_formation_change<Dim>(cfg, rng)
                                                    : init_package_delivery<Dim>(cfg, rng);
}

// Selfish per-agent reward: progress term (velocity dotted with the goal
// offset) minus one penalty unit per neighbor inside the avoidance radius.
// Evaluated on true state; observation noise never enters the reward.
template <int Dim>
std::vector<RewardRecord> reward(const SwarmState<Dim>& state, const ScenarioConfig& cfg) {
  const int n = state.size();
  std::vector<RewardRecord> out(n);
  for (int i = 0; i < n; ++i) {
    const auto& a = state.agents[i];
    int near_count = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if ((state.agents[j].position - a.position).norm() <= cfg.avoid_radius) ++near_count;
    }
    out[i].proximity_count = near_count;
    out[i].reward = cfg.c_p * a.velocity.dot(a.goal - a.position) - cfg.c_c * near_count;
  }
  return out;
}

// Package delivery: an agent inside the capture radius of its goal collects
// the package and receives a fresh uniform goal on the circle; the returned
// list holds the collecting agents in index order. Formation change never
// moves goals.
template <int Dim>
std::vector<int> advance_goals(SwarmState<Dim>& state, const ScenarioConfig& cfg, Rng& rng) {
  std::vector<int> collected;
  if (cfg.kind != ScenarioKind::package_delivery) return collected;
  for (int i = 0; i < state.size(); ++i) {
    auto& a = state.agents[i];
    if ((a.goal - a.position).norm() <= cfg.capture_radius) {
      const double goal_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      a.goal = detail::on_circle<Dim>(cfg.circle_radius, goal_angle);
      collected.push_back(i);
    }
  }
  return collected;
}

struct DoneFlags {
  bool done = false;
  std::vector<bool> reached;
};

// Formation change ends when every agent is inside the capture radius of its
// goal or the horizon elapses; package delivery always runs to horizon.
template <int Dim>
DoneFlags episode_done(const SwarmState<Dim>& state, const ScenarioConfig& cfg) {
  DoneFlags f;
  f.reached.resize(state.size());
  bool all = true;
  for (int i = 0; i < state.size(); ++i) {
    f.reached[i] = (state.agents[i].goal - state.agents[i].position).norm() <= cfg.capture_radius;
    all = all && f.reached[i];
  }
  if (state.step >= cfg.horizon) f.done = true;
  if (cfg.kind == ScenarioKind::formation_change && all) f.done = true;
  return f;
}

}  // namespace swarm
