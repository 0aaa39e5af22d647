#pragma once

#include <memory>
#include <string>
#include <vector>

#include "swarm/config.hpp"
#include "swarm/environment.hpp"
#include "swarm/ppo.hpp"

namespace swarm {

struct EpisodeRecord {
  long end_step = 0;        // global agent-step count when the episode ended
  double mean_return = 0.0; // undiscounted per-agent return
  int agents = 0;
  int collisions = 0;       // edge-triggered pair events over the episode
  bool task_complete = false;
};

struct IterationStats {
  long iteration = 0;
  long steps_done = 0;  // after this iteration
  int agents = 0;
  long batch = 0;
  double reward_mean = 0.0;
  long episodes = 0;
  double episode_return_mean = 0.0;
  double episode_collision_mean = 0.0;
  PpoStats ppo;
  double wall_s = 0.0;
};

struct TrainOptions {
  Config config;
  std::string out_dir;      // checkpoints and train_log.jsonl
  std::string resume_from;  // checkpoint path; must match the config fingerprint
  long max_iterations = 0;  // stop this invocation after N iterations; 0 = no cap
  bool quiet = false;       // suppress the per-iteration progress line
};

struct TrainResult {
  std::string final_checkpoint;
  std::vector<IterationStats> iterations;
  std::vector<EpisodeRecord> episodes;
  long steps_done = 0;
};

// Persistent rollout worker: one environment plus its sampling rng and the
// accumulators of the episode in flight. Runners live across iterations so
// episodes longer than one batch window keep their state; checkpoints carry
// the serialized pool, which is what makes resume bit-exact.
struct EnvRunner {
  std::unique_ptr<EnvBase> env;
  Rng act_rng;
  std::uint64_t reseed_base = 0;  // episode reseeds derive from this
  long episode = 0;               // completed episodes in this runner
  Eigen::VectorXd returns;        // per-agent return of the running episode
  int collisions = 0;             // collision events of the running episode
};

struct EnvPool {
  std::vector<EnvRunner> runners;
  int agents = 0;

  // Seeds derive from (config seed, build iteration, env index), so a pool
  // rebuilt at the same iteration is identical across runs.
  static EnvPool build(const Config& cfg, int agents, long iteration);
  std::string serialize() const;
  static EnvPool restore(const Config& cfg, const std::string& blob);
};

// One iteration's on-policy batch: at least ppo.train_batch agent steps taken
// from the pool, merged per runner into contiguous per-agent segments.
TransitionBatch collect_rollouts(const PolicyParameters& params, const Config& cfg, EnvPool& pool,
                                 std::vector<EpisodeRecord>* episodes, long steps_before);

// Loop: query the curriculum, rebuild the pool when the agent count changes,
// collect, compute advantages, update, log, checkpoint.
TrainResult train(const TrainOptions& opt);

}  // namespace swarm
