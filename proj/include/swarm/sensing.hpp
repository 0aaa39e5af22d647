#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "swarm/dynamics.hpp"
#include "swarm/geometry.hpp"
#include "swarm/rng.hpp"

namespace swarm {

// Gaussian standard deviations of the sensor model. All values are in the
// observed quantity's natural unit (sigma_phi in radians). Zero disables the
// corresponding noise source.
struct NoiseParams {
  double sigma_p = 0.001;     // m, own position (and z offsets in 3D)
  double sigma_v = 0.01;      // m/s, own and relative velocities
  double sigma_d = 0.001;     // m, distances
  double sigma_phi = 0.0001;  // rad, bearings

  void validate() const {
    if (sigma_p < 0 || sigma_v < 0 || sigma_d < 0 || sigma_phi < 0)
      throw std::invalid_argument("NoiseParams: standard deviations must be >= 0");
  }
};

// One in-range neighbor as seen by an agent. Emitted values carry sensor
// noise; true_distance and agent index are noise-free bookkeeping used for
// the k-nearest selection and its tie-breaking.
template <int Dim>
struct NeighborObservation {
  double distance = 0.0;                    // m, noisy
  double bearing = 0.0;                     // rad, noisy, world frame
  Vec<Dim> rel_velocity = Vec<Dim>::Zero(); // m/s, noisy, v_j - v_i
  double z_offset = 0.0;                    // m, noisy (3D only)
  double true_distance = 0.0;               // m, selection key
  int agent = -1;
};

// Everything one agent senses in a step, before the k-nearest reduction.
// The goal block is always present; it is not subject to the sensor range.
template <int Dim>
struct RawObservation {
  Vec<Dim> own_position = Vec<Dim>::Zero();  // noisy
  Vec<Dim> own_velocity = Vec<Dim>::Zero();  // noisy
  double goal_distance = 0.0;                // noisy
  double goal_bearing = 0.0;                 // noisy, world frame
  double goal_z_offset = 0.0;                // noisy (3D only)
  std::vector<NeighborObservation<Dim>> neighbors;  // all inside sensor range
};

// Fixed-width policy input. Layout, in order:
//   own position (Dim), own velocity (Dim), goal distance, goal bearing,
//   [goal z offset in 3D], then k neighbor blocks of
//   distance, bearing, relative velocity (Dim), [z offset in 3D].
// Missing neighbors are padded with a phantom at the sensor range:
// distance = K, bearing = 0, relative velocity = 0, z offset = 0.
struct ObservationVector {
  Eigen::VectorXd values;
  int padded = 0;  // number of padding blocks

  static int own_width(int dim) { return 2 * dim + 2 + (dim == 3 ? 1 : 0); }
  static int neighbor_width(int dim) { return 2 + dim + (dim == 3 ? 1 : 0); }
  static int width(int dim, int k) { return own_width(dim) + k * neighbor_width(dim); }
};

// Draws one agent's noisy observation. Range membership is decided on true
// (noise-free) positions; only the emitted values are noised. Neighbors are
// listed in agent-index order. Draw order per call is fixed: own position,
// own velocity, goal distance, goal bearing, [goal z], then per neighbor
// distance, bearing, relative velocity, [z].
template <int Dim>
RawObservation<Dim> sense(const SwarmState<Dim>& world, int agent,
                          const NoiseParams& noise, double sensor_range, Rng& rng) {
  const auto& self = world.agents.at(agent);
  RawObservation<Dim> obs;
  for (int c = 0; c < Dim; ++c)
    obs.own_position[c] = rng.normal(self.position[c], noise.sigma_p);
  for (int c = 0; c < Dim; ++c)
    obs.own_velocity[c] = rng.normal(self.velocity[c], noise.sigma_v);
  obs.goal_distance = rng.normal((self.goal - self.position).norm(), noise.sigma_d);
  obs.goal_bearing = rng.normal(bearing<Dim>(self.position, self.goal), noise.sigma_phi);
  if constexpr (Dim == 3)
    obs.goal_z_offset = rng.normal(self.goal.z() - self.position.z(), noise.sigma_p);

  for (int j = 0; j < world.size(); ++j) {
    if (j == agent) continue;
    const auto& other = world.agents[j];
    const double true_dist = (other.position - self.position).norm();
    if (true_dist > sensor_range) continue;
    NeighborObservation<Dim> nb;
    nb.true_distance = true_dist;
    nb.agent = j;
    nb.distance = rng.normal(true_dist, noise.sigma_d);
    nb.bearing = rng.normal(bearing<Dim>(self.position, other.position), noise.sigma_phi);
    for (int c = 0; c < Dim; ++c)
      nb.rel_velocity[c] = rng.normal(other.velocity[c] - self.velocity[c], noise.sigma_v);
    if constexpr (Dim == 3)
      nb.z_offset = rng.normal(other.position.z() - self.position.z(), noise.sigma_p);
    obs.neighbors.push_back(nb);
  }
  return obs;
}

// Keeps the k nearest neighbor blocks by true distance (ties broken by agent
// index), pads the remainder, and assembles the fixed-width vector.
template <int Dim>
ObservationVector reduce_k_nearest(const RawObservation<Dim>& raw, int k,
                                   double sensor_range) {
  if (k < 1) throw std::invalid_argument("reduce_k_nearest: k must be >= 1");
  std::vector<const NeighborObservation<Dim>*> order;
  order.reserve(raw.neighbors.size());
  for (const auto& nb : raw.neighbors) order.push_back(&nb);
  std::sort(order.begin(), order.end(),
            [](const NeighborObservation<Dim>* a, const NeighborObservation<Dim>* b) {
              if (a->true_distance != b->true_distance)
                return a->true_distance < b->true_distance;
              return a->agent < b->agent;
            });

  ObservationVector out;
  out.values.resize(ObservationVector::width(Dim, k));
  int at = 0;
  for (int c = 0; c < Dim; ++c) out.values[at++] = raw.own_position[c];
  for (int c = 0; c < Dim; ++c) out.values[at++] = raw.own_velocity[c];
  out.values[at++] = raw.goal_distance;
  out.values[at++] = raw.goal_bearing;
  if constexpr (Dim == 3) out.values[at++] = raw.goal_z_offset;

  for (int slot = 0; slot < k; ++slot) {
    if (slot < static_cast<int>(order.size())) {
      const auto& nb = *order[slot];
      out.values[at++] = nb.distance;
      out.values[at++] = nb.bearing;
      for (int c = 0; c < Dim; ++c) out.values[at++] = nb.rel_velocity[c];
      if constexpr (Dim == 3) out.values[at++] = nb.z_offset;
    } else {
      ++out.padded;
      out.values[at++] = sensor_range;
      out.values[at++] = 0.0;
      for (int c = 0; c < Dim; ++c) out.values[at++] = 0.0;
      if constexpr (Dim == 3) out.values[at++] = 0.0;
    }
  }
  return out;
}

}  // namespace swarm
