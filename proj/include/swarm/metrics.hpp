#pragma once

#include <vector>

#include "swarm/trace.hpp"

namespace swarm {

// Metrics are pure functions of a stored trace; everything they need beyond
// the state rows (dt, speed limit, radii, thresholds) rides in the embedded
// config. A trace ends with a terminal state row carrying empty action and
// reward arrays, so arrival on the final transition is visible.
struct MetricsReport {
  int agents = 0;
  double duration_s = 0.0;

  // Mean over agents of (arrival time - straight-line time at v_max).
  // Agents that never arrive are censored at the horizon and set deadlock.
  double extra_time_s = 0.0;
  bool deadlock = false;

  // Min over steps and pairs; undefined for a single agent.
  bool min_distance_defined = false;
  double min_distance = 0.0;

  // Path length against the straight line to the initial goal.
  double extra_distance_m = 0.0;  // mean over agents, absolute
  double travel_ratio = 1.0;      // mean over agents, path / straight

  double packages_per_agent = 0.0;

  // Rising edges of pairwise distance below the collision threshold.
  int collisions = 0;
  double collision_threshold = 0.0;
};

MetricsReport compute_metrics(const EpisodeTrace& trace);

struct AggregateMetrics {
  int runs = 0;
  double extra_time_s = 0.0;       // mean
  bool any_deadlock = false;
  double min_distance = 0.0;       // min over runs
  double min_distance_mean = 0.0;
  bool min_distance_defined = false;
  double extra_distance_m = 0.0;   // mean
  double travel_ratio = 0.0;       // mean
  double packages_per_agent = 0.0; // mean
  int collisions_total = 0;
  double collisions_mean = 0.0;
};

AggregateMetrics aggregate_metrics(const std::vector<MetricsReport>& runs);

}  // namespace swarm
