#pragma once

#include <string>
#include <vector>

#include "swarm/config.hpp"
#include "swarm/metrics.hpp"
#include "swarm/policy.hpp"
#include "swarm/trace.hpp"

namespace swarm {

enum class ControllerKind { policy, orca, fmp, straight };

std::string to_string(ControllerKind k);
ControllerKind controller_from_string(const std::string& s);

// Runs one full episode under the given controller, deterministically for a
// given (config, seed): the policy acts on its mean, baselines are
// deterministic functions of the observations, and all noise comes from the
// seed. The returned trace embeds the config with scenario.seed set to
// `seed`. `policy` may be null for non-policy controllers; checkpoint_label
// is recorded in the header for replay.
EpisodeTrace run_episode(const Config& cfg, ControllerKind kind, const PolicyParameters* policy,
                         std::uint64_t seed, const std::string& checkpoint_label);

struct EvalOptions {
  Config config;
  ControllerKind controller = ControllerKind::straight;
  std::string checkpoint;  // required for the policy controller
  int runs = 1;
  std::uint64_t base_seed = 0;  // run r uses mix_seed(base_seed, r)
  std::string out_dir;          // traces written here when non-empty
};

struct RunResult {
  MetricsReport metrics;
  std::string trace_path;  // empty when traces are not written
  double wall_time_s = 0.0;
};

struct EvalResult {
  std::vector<RunResult> runs;
  AggregateMetrics aggregate;
};

EvalResult evaluate(const EvalOptions& opt);

// Re-simulates a stored trace from its embedded config and seed and compares
// step data bitwise. A fingerprint that does not match the embedded config
// means the file was edited; replay refuses to run in that case.
struct ReplayReport {
  bool fingerprint_ok = false;
  TraceMatch match;
};
ReplayReport replay_trace(const std::string& path);

// trajectories.csv (per agent per step positions and goals) and, for more
// than one agent, min_distance.csv (per step pairwise minimum).
void write_plot_data(const EpisodeTrace& trace, const std::string& out_dir);

}  // namespace swarm
