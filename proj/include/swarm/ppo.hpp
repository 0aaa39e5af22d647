#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "swarm/policy.hpp"
#include "swarm/rng.hpp"

namespace swarm {

struct PpoConfig {
  double learning_rate = 5e-5;
  double kl_coeff = 0.2;    // weight on KL(behavior || current)
  double clip_param = 0.3;  // ratio clip half-width
  long train_batch = 50000;   // agent steps per iteration, lower bound
  long minibatch = 2500;      // SGD chunk
  int sgd_iters = 20;         // passes over the batch per iteration
  double gamma = 0.99;
  double gae_lambda = 0.95;
  long total_steps = 1400000;  // training budget in agent steps

  void validate() const {
    if (learning_rate <= 0) throw std::invalid_argument("ppo: learning_rate must be > 0");
    if (kl_coeff < 0) throw std::invalid_argument("ppo: kl_coeff must be >= 0");
    if (clip_param <= 0 || clip_param >= 1)
      throw std::invalid_argument("ppo: clip_param must be in (0,1)");
    if (train_batch <= 0 || minibatch <= 0 || minibatch > train_batch)
      throw std::invalid_argument("ppo: need 0 < minibatch <= train_batch");
    if (train_batch % minibatch != 0)
      throw std::invalid_argument("ppo: train_batch must be divisible by minibatch");
    if (sgd_iters <= 0) throw std::invalid_argument("ppo: sgd_iters must be > 0");
    if (gamma <= 0 || gamma >= 1) throw std::invalid_argument("ppo: gamma must be in (0,1)");
    if (gae_lambda < 0 || gae_lambda > 1)
      throw std::invalid_argument("ppo: gae_lambda must be in [0,1]");
    if (total_steps <= 0) throw std::invalid_argument("ppo: total_steps must be > 0");
  }
};

// One contiguous stretch of a single agent's experience inside the batch.
// bootstrap_value carries V(s_end) when the stretch was cut off mid-episode;
// a terminal stretch bootstraps zero.
struct Segment {
  long start = 0;
  long len = 0;
  double bootstrap_value = 0.0;  // physical units
  bool terminal = false;
};

// Column-per-transition storage. Everything the update needs is captured at
// collection time, so the batch is self-contained.
struct TransitionBatch {
  Eigen::MatrixXd obs;         // obs_dim x M
  Eigen::MatrixXd raw_action;  // action_dim x M, normalized units
  Eigen::VectorXd log_prob;    // behavior log density of raw_action
  Eigen::MatrixXd old_mean;    // action_dim x M, normalized units
  Eigen::MatrixXd old_std;     // action_dim x M
  Eigen::VectorXd reward;      // M
  Eigen::VectorXd value;       // M, physical units
  std::vector<Segment> segments;

  // Filled by compute_advantages.
  Eigen::VectorXd advantage;     // M, normalized over the batch
  Eigen::VectorXd value_target;  // M, physical units

  long size() const { return obs.cols(); }
};

// GAE over each segment independently, then batch-wide advantage
// normalization. value_target keeps the unnormalized advantage plus value.
void compute_advantages(TransitionBatch& batch, double gamma, double lambda);

struct LossTerms {
  double surrogate = 0.0;  // mean clipped surrogate objective (maximized)
  double kl = 0.0;         // mean KL(behavior || current)
  double value_mse = 0.0;  // mean squared value error, normalized units
  double entropy = 0.0;    // current policy entropy
  double clip_fraction = 0.0;
  double total = 0.0;      // -surrogate + kl_coeff*kl + 0.5*value_mse
};

// Loss over the selected columns; when grads_out is non-null the analytic
// parameter gradients of `total` are accumulated into it.
LossTerms ppo_loss(const PolicyParameters& p, const TransitionBatch& batch,
                   const std::vector<long>& idx, const PpoConfig& cfg, ParamGrads* grads_out);

struct PpoStats {
  double policy_loss = 0.0;  // -surrogate
  double value_loss = 0.0;
  double kl = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double total_loss = 0.0;
  int updates = 0;
};

// sgd_iters epochs of shuffled minibatches with Adam steps. Throws on a
// non-finite loss with a summary of the offending minibatch.
PpoStats ppo_update(PolicyParameters& p, AdamState& adam, const TransitionBatch& batch,
                    const PpoConfig& cfg, Rng& shuffle_rng);

}  // namespace swarm
