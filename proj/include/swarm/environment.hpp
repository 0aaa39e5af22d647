#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <memory>
#include <sstream>
#include <vector>

#include "swarm/binio.hpp"
#include "swarm/config.hpp"
#include "swarm/dynamics.hpp"
#include "swarm/scenario.hpp"
#include "swarm/sensing.hpp"

namespace swarm {

enum class IntegratorMode {
  double_integrator,  // commands are (target velocity, target yaw rate)
  single_integrator,  // commands set the velocity directly, yaw ignored
};

// Dimension-erased episode driver for the training loop. Commands arrive as
// one column per agent: Dim velocity entries then a yaw-rate entry (unused in
// single-integrator mode). Rewards are evaluated on the pre-step state, so a
// trace row is (state_t, action_t, reward_t).
class EnvBase {
 public:
  struct StepResult {
    Eigen::VectorXd rewards;
    std::vector<int> collected;  // package pickups during this transition
    std::vector<int> reached;    // agents inside the capture radius pre-step
    int collisions = 0;          // pairs newly crossing below the collision threshold
    bool done = false;
    bool task_complete = false;  // formation finished; horizon-only ends leave this false
  };

  virtual ~EnvBase() = default;
  virtual int agents() const = 0;
  virtual int dimension() const = 0;
  virtual int obs_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual void reset(std::uint64_t seed) = 0;
  virtual Eigen::MatrixXd observe() = 0;  // obs_dim x N, consumes sensor noise
  virtual StepResult step(const Eigen::MatrixXd& commands) = 0;
  virtual long step_index() const = 0;

  // Full mutable state (agents, step counter, noise rng, collision flags) so
  // a training checkpoint can freeze a live episode and resume it bit-exactly.
  virtual void save_state(std::ostream& os) const = 0;
  virtual void load_state(std::istream& is) = 0;
};

template <int Dim>
class Environment final : public EnvBase {
 public:
  Environment(const ScenarioConfig& scenario, const PhysParams& phys, const NoiseParams& noise,
              double sensor_range, int k_nearest,
              IntegratorMode mode = IntegratorMode::double_integrator,
              double collision_threshold = 1.5)
      : scenario_(scenario),
        phys_(phys),
        noise_(noise),
        sensor_range_(sensor_range),
        k_(k_nearest),
        mode_(mode),
        collision_threshold_(collision_threshold),
        rng_(scenario.seed) {
    scenario_.validate();
    phys_.validate();
    noise_.validate();
    state_ = init_scenario<Dim>(scenario_, rng_);
    in_collision_.assign(static_cast<std::size_t>(scenario_.agents) * scenario_.agents, 0);
  }

  int agents() const override { return scenario_.agents; }
  int dimension() const override { return Dim; }
  int obs_dim() const override { return ObservationVector::width(Dim, k_); }
  int action_dim() const override { return Dim + 1; }
  long step_index() const override { return state_.step; }

  const SwarmState<Dim>& state() const { return state_; }
  const ScenarioConfig& scenario() const { return scenario_; }
  const PhysParams& phys() const { return phys_; }

  void reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    state_ = init_scenario<Dim>(scenario_, rng_);
    std::fill(in_collision_.begin(), in_collision_.end(), 0);
  }

  // Per-agent raw observations in index order; the policy path reduces them,
  // baseline controllers consume them whole. Noise draws are identical
  // either way, which keeps replay exact across controllers.
  std::vector<RawObservation<Dim>> sense_raw() {
    std::vector<RawObservation<Dim>> out;
    out.reserve(scenario_.agents);
    for (int i = 0; i < scenario_.agents; ++i)
      out.push_back(sense<Dim>(state_, i, noise_, sensor_range_, rng_));
    return out;
  }

  Eigen::MatrixXd flatten(const std::vector<RawObservation<Dim>>& raws) const {
    Eigen::MatrixXd obs(obs_dim(), static_cast<int>(raws.size()));
    for (std::size_t i = 0; i < raws.size(); ++i)
      obs.col(static_cast<int>(i)) = reduce_k_nearest<Dim>(raws[i], k_, sensor_range_).values;
    return obs;
  }

  Eigen::MatrixXd observe() override { return flatten(sense_raw()); }

  StepResult step(const Eigen::MatrixXd& commands) override {
    if (commands.rows() != action_dim() || commands.cols() != scenario_.agents)
      throw std::invalid_argument("Environment::step: command matrix shape mismatch");

    StepResult res;
    const std::vector<RewardRecord> rec = reward<Dim>(state_, scenario_);
    res.rewards.resize(scenario_.agents);
    for (int i = 0; i < scenario_.agents; ++i) res.rewards(i) = rec[i].reward;

    const DoneFlags pre = episode_done<Dim>(state_, scenario_);
    for (int i = 0; i < scenario_.agents; ++i)
      if (pre.reached[i]) res.reached.push_back(i);

    if (mode_ == IntegratorMode::double_integrator) {
      std::vector<AgentAction<Dim>> actions(scenario_.agents);
      for (int i = 0; i < scenario_.agents; ++i) {
        actions[i].target_velocity = commands.col(i).template head<Dim>();
        actions[i].target_yaw_rate = commands(Dim, i);
        actions[i] = clip_action<Dim>(actions[i], phys_);
      }
      state_ = step_swarm<Dim>(state_, actions, phys_);
    } else {
      for (int i = 0; i < scenario_.agents; ++i) {
        auto& a = state_.agents[i];
        Vec<Dim> v = commands.col(i).template head<Dim>();
        const double speed = v.norm();
        if (speed > phys_.v_max) v *= phys_.v_max / speed;
        a.position += v * phys_.dt;
        a.velocity = v;
      }
      state_.step += 1;
    }

    // Collision events are edge triggered per pair so a lingering overlap
    // counts once until the pair separates again.
    for (int i = 0; i < scenario_.agents; ++i) {
      for (int j = i + 1; j < scenario_.agents; ++j) {
        const bool close =
            (state_.agents[i].position - state_.agents[j].position).norm() < collision_threshold_;
        char& flag = in_collision_[static_cast<std::size_t>(i) * scenario_.agents + j];
        if (close && !flag) ++res.collisions;
        flag = close ? 1 : 0;
      }
    }

    res.collected = advance_goals<Dim>(state_, scenario_, rng_);

    const DoneFlags post = episode_done<Dim>(state_, scenario_);
    res.done = post.done;
    if (scenario_.kind == ScenarioKind::formation_change) {
      bool all = true;
      for (const bool r : post.reached) all = all && r;
      res.task_complete = all;
    }
    return res;
  }

  void save_state(std::ostream& os) const override {
    binio::write_raw<std::int32_t>(os, scenario_.agents);
    binio::write_raw<std::int32_t>(os, Dim);
    binio::write_raw<std::int64_t>(os, state_.step);
    for (const auto& a : state_.agents) {
      for (int c = 0; c < Dim; ++c) binio::write_raw<double>(os, a.position[c]);
      for (int c = 0; c < Dim; ++c) binio::write_raw<double>(os, a.velocity[c]);
      binio::write_raw<double>(os, a.yaw);
      binio::write_raw<double>(os, a.yaw_rate);
      for (int c = 0; c < Dim; ++c) binio::write_raw<double>(os, a.goal[c]);
    }
    std::ostringstream eng;
    eng << rng_.engine();
    binio::write_string(os, eng.str());
    os.write(in_collision_.data(), static_cast<std::streamsize>(in_collision_.size()));
  }

  void load_state(std::istream& is) override {
    if (binio::read_raw<std::int32_t>(is) != scenario_.agents)
      throw std::runtime_error("Environment::load_state: agent count mismatch");
    if (binio::read_raw<std::int32_t>(is) != Dim)
      throw std::runtime_error("Environment::load_state: dimension mismatch");
    state_.step = binio::read_raw<std::int64_t>(is);
    state_.agents.resize(scenario_.agents);
    for (auto& a : state_.agents) {
      for (int c = 0; c < Dim; ++c) a.position[c] = binio::read_raw<double>(is);
      for (int c = 0; c < Dim; ++c) a.velocity[c] = binio::read_raw<double>(is);
      a.yaw = binio::read_raw<double>(is);
      a.yaw_rate = binio::read_raw<double>(is);
      for (int c = 0; c < Dim; ++c) a.goal[c] = binio::read_raw<double>(is);
    }
    std::istringstream eng(binio::read_string(is));
    eng >> rng_.engine();
    if (!eng) throw std::runtime_error("Environment::load_state: bad rng state");
    in_collision_.assign(static_cast<std::size_t>(scenario_.agents) * scenario_.agents, 0);
    is.read(in_collision_.data(), static_cast<std::streamsize>(in_collision_.size()));
    if (!is) throw std::runtime_error("Environment::load_state: truncated");
  }

 private:
  ScenarioConfig scenario_;
  PhysParams phys_;
  NoiseParams noise_;
  double sensor_range_;
  int k_;
  IntegratorMode mode_;
  double collision_threshold_;
  Rng rng_;
  SwarmState<Dim> state_;
  std::vector<char> in_collision_;
};

inline std::unique_ptr<EnvBase> make_environment(const Config& cfg, int agents_override = -1,
                                                 IntegratorMode mode = IntegratorMode::double_integrator) {
  ScenarioConfig sc = cfg.scenario;
  if (agents_override > 0) sc.agents = agents_override;
  if (cfg.scenario.dimension == 2)
    return std::make_unique<Environment<2>>(sc, cfg.phys, cfg.noise, cfg.sensor_range,
                                            cfg.k_nearest, mode, cfg.collision_threshold);
  return std::make_unique<Environment<3>>(sc, cfg.phys, cfg.noise, cfg.sensor_range,
                                          cfg.k_nearest, mode, cfg.collision_threshold);
}

}  // namespace swarm
