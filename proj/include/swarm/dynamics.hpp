#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "swarm/geometry.hpp"

namespace swarm {

// Physical stepping constants. c_v and c_w are first-order lag rates pulling
// velocity / yaw rate toward their commanded set points.
struct PhysParams {
  double dt = 0.02;         // s
  double c_v = 1.0;         // 1/s
  double c_w = 1.0;         // 1/s
  double v_max = 30.0;      // m/s
  double omega_max = 15.0;  // 1/s

  // The discrete lag update is stable only for c*dt in (0, 2).
  void validate() const {
    if (dt <= 0.0) throw std::invalid_argument("PhysParams: dt must be > 0");
    if (c_v * dt <= 0.0 || c_v * dt >= 2.0)
      throw std::invalid_argument("PhysParams: c_v*dt must lie in (0, 2)");
    if (c_w * dt <= 0.0 || c_w * dt >= 2.0)
      throw std::invalid_argument("PhysParams: c_w*dt must lie in (0, 2)");
    if (v_max <= 0.0 || omega_max <= 0.0)
      throw std::invalid_argument("PhysParams: speed limits must be > 0");
  }
};

// Full per-agent state. Yaw is stored unwrapped; only cos/sin are ever
// consumed, so the integrator stays exact.
template <int Dim>
struct AgentState {
  Vec<Dim> position = Vec<Dim>::Zero();  // m
  Vec<Dim> velocity = Vec<Dim>::Zero();  // m/s
  double yaw = 0.0;                      // rad
  double yaw_rate = 0.0;                 // rad/s
  Vec<Dim> goal = Vec<Dim>::Zero();      // m

  bool finite() const {
    return all_finite<Dim>(position) && all_finite<Dim>(velocity) &&
           std::isfinite(yaw) && std::isfinite(yaw_rate) && all_finite<Dim>(goal);
  }
};

// Commanded set points. Invariants: |target_velocity| <= v_max,
// |target_yaw_rate| <= omega_max; callers clip before stepping.
template <int Dim>
struct AgentAction {
  Vec<Dim> target_velocity = Vec<Dim>::Zero();  // m/s
  double target_yaw_rate = 0.0;                 // rad/s
};

// Rescales the velocity command to norm v_max when it exceeds it and clamps
// the yaw-rate command. Identity inside the constraint set.
template <int Dim>
AgentAction<Dim> clip_action(AgentAction<Dim> a, const PhysParams& p) {
  const double n = a.target_velocity.norm();
  if (n > p.v_max) a.target_velocity *= p.v_max / n;
  if (a.target_yaw_rate > p.omega_max) a.target_yaw_rate = p.omega_max;
  if (a.target_yaw_rate < -p.omega_max) a.target_yaw_rate = -p.omega_max;
  return a;
}

template <int Dim>
struct SwarmState {
  std::vector<AgentState<Dim>> agents;
  long step = 0;

  int size() const { return static_cast<int>(agents.size()); }
};

// Velocity-momentum step with yaw. Semi-explicit Euler in equation order:
// position integrates the pre-update velocity, yaw the pre-update yaw rate;
// velocity and yaw rate relax toward the (yaw-rotated) commands with rates
// c_v and c_w. In 3D the z component bypasses the rotation. The goal is left
// untouched; goal transitions belong to the scenario layer.
template <int Dim>
AgentState<Dim> step_agent(const AgentState<Dim>& s, const AgentAction<Dim>& a,
                           const PhysParams& p) {
  assert(s.finite() && all_finite<Dim>(a.target_velocity) &&
         std::isfinite(a.target_yaw_rate));
  AgentState<Dim> out = s;
  out.position = s.position + s.velocity * p.dt;
  Vec<Dim> rotated = a.target_velocity;
  rotated.template head<2>() =
      rotation_matrix(s.yaw) * a.target_velocity.template head<2>();
  out.velocity = s.velocity + p.c_v * (rotated - s.velocity) * p.dt;
  out.yaw = s.yaw + s.yaw_rate * p.dt;
  out.yaw_rate = s.yaw_rate + p.c_w * (a.target_yaw_rate - s.yaw_rate) * p.dt;
  return out;
}

// Independent per-agent stepping; the dynamics have no inter-agent terms.
template <int Dim>
SwarmState<Dim> step_swarm(const SwarmState<Dim>& state,
                           const std::vector<AgentAction<Dim>>& actions,
                           const PhysParams& params) {
  if (actions.size() != state.agents.size())
    throw std::invalid_argument("step_swarm: action count does not match agent count");
  SwarmState<Dim> out;
  out.agents.reserve(state.agents.size());
  for (std::size_t i = 0; i < state.agents.size(); ++i)
    out.agents.push_back(step_agent<Dim>(state.agents[i], actions[i], params));
  out.step = state.step + 1;
  return out;
}

// Kinematic reference model: the commanded velocity moves position directly.
template <int Dim>
Vec<Dim> step_single_integrator(const Vec<Dim>& position,
                                const Vec<Dim>& velocity_action, double dt) {
  return position + dt * velocity_action;
}

}  // namespace swarm
