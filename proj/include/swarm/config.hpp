#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swarm/dynamics.hpp"
#include "swarm/fmp.hpp"
#include "swarm/orca.hpp"
#include "swarm/ppo.hpp"
#include "swarm/scenario.hpp"
#include "swarm/sensing.hpp"

namespace swarm {

// Every knob of a run in one struct. Serializes to flat key = value text;
// the canonical rendering (fixed key order, shortest round-trip numbers) is
// what the fingerprint hashes, so two configs agree iff their fingerprints do.
struct Config {
  ScenarioConfig scenario;
  PhysParams phys;
  NoiseParams noise;
  PpoConfig ppo;
  OrcaParams orca;
  FmpParams fmp;

  double sensor_range = 10.0;  // m, emission cutoff K
  int k_nearest = 1;           // neighbors kept per observation

  int num_envs = 8;
  int rollout_threads = 1;
  int checkpoint_every = 5;            // iterations between checkpoints
  std::string curriculum = "off";      // "off" | "auto" | "step:count,step:count,..."
  int curriculum_start = 4;
  int curriculum_end = 40;
  int curriculum_increment = 2;

  bool baseline_single_integrator = true;  // baselines drive positions directly
  double collision_threshold = 1.5;        // m, metric threshold

  void validate() const;
};

// Flat key = value text, '#' comments, order-insensitive on load. Unknown or
// duplicate keys and malformed values are errors.
Config parse_config_text(const std::string& text);
Config load_config(const std::string& path);
void save_config(const std::string& path, const Config& cfg);

// Fixed key order, canonical number rendering, no comments.
std::string canonical_text(const Config& cfg);

// FNV-1a over the canonical text.
std::uint64_t config_fingerprint(const Config& cfg);

struct ConfigDiff {
  std::string key;
  std::string left;
  std::string right;
};
std::vector<ConfigDiff> diff_configs(const Config& a, const Config& b);

// Key/value view of the canonical form, e.g. for embedding in trace headers.
std::vector<std::pair<std::string, std::string>> config_entries(const Config& cfg);

// Expands the curriculum field against the training budget. "off" pins the
// configured agent count for the whole run; "auto" steps from curriculum_start
// to curriculum_end by curriculum_increment across equal slices of
// ppo.total_steps; an explicit table is parsed as step:count pairs.
CurriculumSchedule derive_curriculum(const Config& cfg);

// Fixed conditioning constants for the policy: the Gaussian head works in
// normalized units and these scales map between them and physical ones.
// Derived from the config only, so a retrain under the same config gets the
// same conditioning.
struct Conditioning {
  Eigen::VectorXd obs_scale;     // observation divided elementwise
  Eigen::VectorXd action_scale;  // physical command = raw * action_scale
  double value_scale = 1.0;
};
Conditioning policy_conditioning(const Config& cfg);

}  // namespace swarm
