#pragma once

#include <stdexcept>
#include <vector>

#include "swarm/geometry.hpp"
#include "swarm/orca.hpp"
#include "swarm/sensing.hpp"

namespace swarm {

// Potential-field controller: constant-gain attraction toward the goal plus
// inverse-distance repulsion from neighbors inside repulsion_range. With the
// defaults two agents heading for the same point settle at a standoff wider
// than twice the capture radius, which is the failure mode the comparison
// runs are meant to expose.
struct FmpParams {
  double attraction_gain = 25.0;    // m/s contribution toward the goal
  double repulsion_gain = 1000.0;   // scales (1/d - 1/range) per neighbor
  double repulsion_range = 10.0;    // m, repulsion cutoff
  double max_speed = 30.0;          // m/s

  void validate() const {
    if (attraction_gain <= 0 || repulsion_gain < 0 || repulsion_range <= 0 || max_speed <= 0)
      throw std::invalid_argument("FmpParams: gains and range must be positive");
  }
};

template <int Dim>
Vec<Dim> fmp_velocity(const std::vector<NeighborObservation<Dim>>& neighbors,
                      const Vec<Dim>& goal_offset, const FmpParams& p) {
  constexpr double eps = 1e-9;
  Vec<Dim> v = Vec<Dim>::Zero();

  const double goal_dist = goal_offset.norm();
  if (goal_dist > eps) v += p.attraction_gain * (goal_offset / goal_dist);

  for (const auto& nb : neighbors) {
    if (nb.distance >= p.repulsion_range || nb.distance <= eps) continue;
    const Vec<Dim> rel = neighbor_rel_position(nb);
    const double d = rel.norm();
    if (d <= eps) continue;
    v -= p.repulsion_gain * (1.0 / d - 1.0 / p.repulsion_range) * (rel / d);
  }

  const double speed = v.norm();
  if (speed > p.max_speed) v *= p.max_speed / speed;
  return v;
}

// Full-speed pursuit of the goal, stopping inside the capture radius. Serves
// both as the no-avoidance baseline and as the preferred velocity feeding the
// reciprocal-avoidance controller.
template <int Dim>
Vec<Dim> straight_line_velocity(const Vec<Dim>& goal_offset, double max_speed,
                                double capture_radius) {
  const double d = goal_offset.norm();
  if (d <= capture_radius || d <= 0.0) return Vec<Dim>::Zero();
  return max_speed * (goal_offset / d);
}

// Goal offset in the body-independent world frame, reconstructed from the
// emitted goal distance and bearing.
template <int Dim>
Vec<Dim> goal_offset_from_observation(const RawObservation<Dim>& raw) {
  Vec<Dim> off = Vec<Dim>::Zero();
  if constexpr (Dim == 2) {
    off.x() = raw.goal_distance * std::cos(raw.goal_bearing);
    off.y() = raw.goal_distance * std::sin(raw.goal_bearing);
  } else {
    const double h2 = raw.goal_distance * raw.goal_distance - raw.goal_z_offset * raw.goal_z_offset;
    const double h = h2 > 0.0 ? std::sqrt(h2) : 0.0;
    off.x() = h * std::cos(raw.goal_bearing);
    off.y() = h * std::sin(raw.goal_bearing);
    off.z() = raw.goal_z_offset;
  }
  return off;
}

}  // namespace swarm
