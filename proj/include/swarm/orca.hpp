#pragma once

#include <stdexcept>
#include <vector>

#include "swarm/geometry.hpp"
#include "swarm/sensing.hpp"

namespace swarm {

// Reciprocal velocity-obstacle controller constants. Each pairwise
// constraint assumes the other agent takes half of the avoidance effort.
struct OrcaParams {
  double time_horizon = 2.0;   // s, constraints keep the pair clear this long
  double agent_radius = 0.75;  // m, per-agent disc radius
  double max_speed = 30.0;     // m/s
  double time_step = 0.02;     // s, used to resolve already-overlapping discs

  void validate() const {
    if (time_horizon <= 0 || agent_radius <= 0 || max_speed <= 0 || time_step <= 0)
      throw std::invalid_argument("OrcaParams: all fields must be > 0");
  }
};

template <int Dim>
struct OrcaResult {
  Vec<Dim> velocity = Vec<Dim>::Zero();
  bool feasible = true;  // false when the LP fell back to least penetration
};

// Admissible velocity closest to the preferred one under the reciprocal
// half-plane (2D) / half-space (3D) constraints built from the observed
// neighbor geometry. Always returns a velocity: when the constraints admit
// no point inside the speed disc, the least-penetrating velocity is chosen.
OrcaResult<2> orca_velocity(const Vec2& own_velocity,
                            const std::vector<NeighborObservation<2>>& neighbors,
                            const Vec2& preferred_velocity, const OrcaParams& params);

OrcaResult<3> orca_velocity(const Vec3& own_velocity,
                            const std::vector<NeighborObservation<3>>& neighbors,
                            const Vec3& preferred_velocity, const OrcaParams& params);

// Relative neighbor position reconstructed from the emitted observation;
// in 3D the horizontal range follows from the distance and z offset.
template <int Dim>
Vec<Dim> neighbor_rel_position(const NeighborObservation<Dim>& nb) {
  Vec<Dim> rel = Vec<Dim>::Zero();
  if constexpr (Dim == 2) {
    rel.x() = nb.distance * std::cos(nb.bearing);
    rel.y() = nb.distance * std::sin(nb.bearing);
  } else {
    const double h2 = nb.distance * nb.distance - nb.z_offset * nb.z_offset;
    const double h = h2 > 0.0 ? std::sqrt(h2) : 0.0;
    rel.x() = h * std::cos(nb.bearing);
    rel.y() = h * std::sin(nb.bearing);
    rel.z() = nb.z_offset;
  }
  return rel;
}

// Feasibility test for one velocity against the same constraint set the
// solver uses; exposed for the brute-force evaluation in the test suite.
struct HalfPlane {
  Vec2 point;
  Vec2 normal;  // feasible side: normal . (v - point) >= 0
};

std::vector<HalfPlane> orca_halfplanes(const Vec2& own_velocity,
                                       const std::vector<NeighborObservation<2>>& neighbors,
                                       const OrcaParams& params);

}  // namespace swarm
