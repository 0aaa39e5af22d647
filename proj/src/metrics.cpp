#include "swarm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "swarm/config.hpp"

namespace swarm {
namespace {

double dist_at(const TraceStep& s, int dim, int i, int j) {
  double acc = 0.0;
  for (int c = 0; c < dim; ++c) {
    const double d = s.position[i * dim + c] - s.position[j * dim + c];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double goal_dist_at(const TraceStep& s, int dim, int i) {
  double acc = 0.0;
  for (int c = 0; c < dim; ++c) {
    const double d = s.position[i * dim + c] - s.goal[i * dim + c];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

MetricsReport compute_metrics(const EpisodeTrace& trace) {
  if (trace.steps.empty()) throw std::invalid_argument("compute_metrics: empty trace");

  const Config cfg = parse_config_text(header_config_text(trace.header));
  const int n = trace.header.agents;
  const int dim = trace.header.dimension;
  const double dt = cfg.phys.dt;
  const double v_max = cfg.phys.v_max;
  const double capture = cfg.scenario.capture_radius;
  const double horizon_s = cfg.scenario.horizon * dt;

  MetricsReport rep;
  rep.agents = n;
  rep.duration_s = static_cast<double>(trace.steps.size() - 1) * dt;
  rep.collision_threshold = cfg.collision_threshold;

  // Arrival times against the straight-line reference.
  double extra_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d0 = goal_dist_at(trace.steps.front(), dim, i);
    double arrival = -1.0;
    for (const auto& s : trace.steps) {
      if (goal_dist_at(s, dim, i) <= capture) {
        arrival = static_cast<double>(s.step) * dt;
        break;
      }
    }
    if (arrival < 0.0) {
      arrival = horizon_s;
      rep.deadlock = true;
    }
    extra_sum += arrival - d0 / v_max;
  }
  rep.extra_time_s = extra_sum / n;

  // Pairwise minimum distance and edge-triggered collision count.
  if (n > 1) {
    rep.min_distance_defined = true;
    rep.min_distance = std::numeric_limits<double>::infinity();
    std::vector<char> in_collision(static_cast<std::size_t>(n) * n, 0);
    for (const auto& s : trace.steps) {
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          const double d = dist_at(s, dim, i, j);
          rep.min_distance = std::min(rep.min_distance, d);
          char& flag = in_collision[static_cast<std::size_t>(i) * n + j];
          if (d < rep.collision_threshold) {
            if (!flag) ++rep.collisions;
            flag = 1;
          } else {
            flag = 0;
          }
        }
    }
  }

  // Path length against the straight line to the initial goal.
  double extra_dist = 0.0, ratio = 0.0;
  int ratio_agents = 0;
  for (int i = 0; i < n; ++i) {
    double len = 0.0;
    for (std::size_t t = 1; t < trace.steps.size(); ++t) {
      double acc = 0.0;
      for (int c = 0; c < dim; ++c) {
        const double d = trace.steps[t].position[i * dim + c] -
                         trace.steps[t - 1].position[i * dim + c];
        acc += d * d;
      }
      len += std::sqrt(acc);
    }
    const double d0 = goal_dist_at(trace.steps.front(), dim, i);
    extra_dist += len - d0;
    if (d0 > 1e-9) {
      ratio += len / d0;
      ++ratio_agents;
    }
  }
  rep.extra_distance_m = extra_dist / n;
  rep.travel_ratio = ratio_agents > 0 ? ratio / ratio_agents : 1.0;

  long collected = 0;
  for (const auto& s : trace.steps) collected += static_cast<long>(s.collected.size());
  rep.packages_per_agent = static_cast<double>(collected) / n;

  return rep;
}

AggregateMetrics aggregate_metrics(const std::vector<MetricsReport>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate_metrics: no runs");
  AggregateMetrics agg;
  agg.runs = static_cast<int>(runs.size());
  agg.min_distance = std::numeric_limits<double>::infinity();
  int md_runs = 0;
  for (const auto& r : runs) {
    agg.extra_time_s += r.extra_time_s;
    agg.any_deadlock = agg.any_deadlock || r.deadlock;
    if (r.min_distance_defined) {
      agg.min_distance = std::min(agg.min_distance, r.min_distance);
      agg.min_distance_mean += r.min_distance;
      ++md_runs;
    }
    agg.extra_distance_m += r.extra_distance_m;
    agg.travel_ratio += r.travel_ratio;
    agg.packages_per_agent += r.packages_per_agent;
    agg.collisions_total += r.collisions;
  }
  agg.extra_time_s /= agg.runs;
  agg.extra_distance_m /= agg.runs;
  agg.travel_ratio /= agg.runs;
  agg.packages_per_agent /= agg.runs;
  agg.collisions_mean = static_cast<double>(agg.collisions_total) / agg.runs;
  if (md_runs > 0) {
    agg.min_distance_defined = true;
    agg.min_distance_mean /= md_runs;
  } else {
    agg.min_distance = 0.0;
  }
  return agg;
}

}  // namespace swarm
