#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "swarm/rng.hpp"

namespace swarm {

// Three affine layers, ReLU between them. w[0] maps the input, w[2] is the
// head. Stored column-major, one column per input unit.
struct Mlp {
  Eigen::MatrixXd w[3];
  Eigen::VectorXd b[3];
};

// Diagonal-Gaussian policy with separate policy and value trunks. The
// Gaussian lives in normalized action units; action_scale maps a raw sample
// to a physical command and obs_scale / value_scale condition the input and
// the critic the same way. All three are fixed at construction and travel
// with the checkpoint so a saved policy is self-contained.
struct PolicyParameters {
  Mlp pi;  // heads: action mean (normalized units)
  Mlp vf;  // heads: scalar value (normalized units)
  Eigen::VectorXd log_std;       // per action dim, kept inside [min,max]
  Eigen::VectorXd obs_scale;     // observation divided elementwise
  Eigen::VectorXd action_scale;  // physical command = raw * action_scale
  double value_scale = 1.0;      // physical value = raw value * value_scale

  static constexpr double kLogStdMin = -20.0;
  static constexpr double kLogStdMax = 2.0;
  static constexpr int kHidden = 64;

  int obs_dim() const { return static_cast<int>(pi.w[0].cols()); }
  int action_dim() const { return static_cast<int>(pi.w[2].rows()); }
  void clamp_log_std();
};

// Canonical tensor order used by the optimizer state and the checkpoint
// format. The visitor sees every trainable tensor exactly once.
template <class P, class F>
void visit_params(P& p, F&& f) {
  f("pi.w0", p.pi.w[0]);
  f("pi.b0", p.pi.b[0]);
  f("pi.w1", p.pi.w[1]);
  f("pi.b1", p.pi.b[1]);
  f("pi.w2", p.pi.w[2]);
  f("pi.b2", p.pi.b[2]);
  f("vf.w0", p.vf.w[0]);
  f("vf.b0", p.vf.b[0]);
  f("vf.w1", p.vf.w[1]);
  f("vf.b1", p.vf.b[1]);
  f("vf.w2", p.vf.w[2]);
  f("vf.b2", p.vf.b[2]);
  f("log_std", p.log_std);
}

int parameter_count(const PolicyParameters& p);

PolicyParameters init_policy(int obs_dim, int action_dim, const Eigen::VectorXd& obs_scale,
                             const Eigen::VectorXd& action_scale, double value_scale,
                             std::uint64_t seed);

struct PolicyEval {
  Eigen::VectorXd mean;  // normalized units
  Eigen::VectorXd std;
  double value = 0.0;  // physical units (value_scale applied)
};

PolicyEval forward(const PolicyParameters& p, const Eigen::VectorXd& obs);

// Batched forward pass keeping the activations needed for the backward pass.
// Columns are samples.
struct BatchEval {
  Eigen::MatrixXd x;       // scaled input, obs_dim x B
  Eigen::MatrixXd h1, h2;  // policy trunk activations, post-ReLU
  Eigen::MatrixXd g1, g2;  // value trunk activations, post-ReLU
  Eigen::MatrixXd mean;    // action_dim x B, normalized units
  Eigen::RowVectorXd value_raw;  // 1 x B, normalized units
};

BatchEval forward_batch(const PolicyParameters& p, const Eigen::MatrixXd& obs);

struct ParamGrads {
  Mlp pi;
  Mlp vf;
  Eigen::VectorXd log_std;

  static ParamGrads zeros_like(const PolicyParameters& p);
};

// Accumulates dL/dparams given the loss gradients at the two heads; dmean is
// action_dim x B in normalized units, dvalue_raw is 1 x B against the
// unscaled value output.
void backprop(const PolicyParameters& p, const BatchEval& cache, const Eigen::MatrixXd& dmean,
              const Eigen::RowVectorXd& dvalue_raw, ParamGrads& grads);

struct ActionSample {
  Eigen::VectorXd raw;     // Gaussian sample, normalized units
  Eigen::VectorXd action;  // physical command after scaling and clipping
  double log_prob = 0.0;   // density of raw under the sampling Gaussian
  double value = 0.0;      // physical units
};

ActionSample sample_action(const PolicyParameters& p, const Eigen::VectorXd& obs, Rng& rng);

// Mean action, scaled and clipped; no randomness consumed.
Eigen::VectorXd act_deterministic(const PolicyParameters& p, const Eigen::VectorXd& obs);

double gaussian_log_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& std);

// Physical command limits: the velocity block is rescaled onto the max-speed
// ball, the trailing yaw-rate entry is clamped. action_scale carries the
// limits, so a command already inside the set passes through unchanged.
Eigen::VectorXd clip_command(const Eigen::VectorXd& physical, const PolicyParameters& p);

// First-moment Adam state, one slot per tensor in visit order.
struct AdamState {
  std::vector<Eigen::ArrayXXd> m;
  std::vector<Eigen::ArrayXXd> v;
  long t = 0;

  static AdamState zeros_like(const PolicyParameters& p);
};

void adam_step(PolicyParameters& p, AdamState& state, const ParamGrads& grads, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Binary checkpoint: parameters, conditioning constants, optional optimizer
// state, and the training cursor. Loading restores bit-identical doubles.
struct Checkpoint {
  PolicyParameters params;
  AdamState adam;
  bool has_adam = false;
  std::uint64_t config_fingerprint = 0;
  std::int64_t iteration = 0;
  std::int64_t steps_done = 0;
  // Opaque trainer continuation blob (live env pool, sampler rng, episode
  // counters); present only on checkpoints written by the training loop.
  std::string trainer_state;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace swarm
