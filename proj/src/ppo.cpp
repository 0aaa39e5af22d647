#include "swarm/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace swarm {

void compute_advantages(TransitionBatch& batch, double gamma, double lambda) {
  const long m = batch.size();
  batch.advantage.resize(m);
  batch.value_target.resize(m);

  for (const Segment& seg : batch.segments) {
    if (seg.start < 0 || seg.len <= 0 || seg.start + seg.len > m)
      throw std::invalid_argument("compute_advantages: segment out of range");
    double gae = 0.0;
    for (long t = seg.len - 1; t >= 0; --t) {
      const long i = seg.start + t;
      const double next_value = t + 1 < seg.len ? batch.value(i + 1)
                                : seg.terminal  ? 0.0
                                                : seg.bootstrap_value;
      const double delta = batch.reward(i) + gamma * next_value - batch.value(i);
      gae = delta + gamma * lambda * gae;
      batch.advantage(i) = gae;
      batch.value_target(i) = gae + batch.value(i);
    }
  }

  const double mean = batch.advantage.mean();
  const double var = (batch.advantage.array() - mean).square().sum() / static_cast<double>(m);
  batch.advantage = (batch.advantage.array() - mean) / (std::sqrt(var) + 1e-8);
}

LossTerms ppo_loss(const PolicyParameters& p, const TransitionBatch& batch,
                   const std::vector<long>& idx, const PpoConfig& cfg, ParamGrads* grads_out) {
  const long m = static_cast<long>(idx.size());
  if (m == 0) throw std::invalid_argument("ppo_loss: empty minibatch");
  const int od = p.obs_dim();
  const int ad = p.action_dim();

  Eigen::MatrixXd obs(od, m), raw(ad, m), old_mean(ad, m), old_std(ad, m);
  Eigen::VectorXd logp_old(m), adv(m), target_scaled(m);
  for (long c = 0; c < m; ++c) {
    const long i = idx[c];
    obs.col(c) = batch.obs.col(i);
    raw.col(c) = batch.raw_action.col(i);
    old_mean.col(c) = batch.old_mean.col(i);
    old_std.col(c) = batch.old_std.col(i);
    logp_old(c) = batch.log_prob(i);
    adv(c) = batch.advantage(i);
    target_scaled(c) = batch.value_target(i) / p.value_scale;
  }

  const BatchEval ev = forward_batch(p, obs);
  const Eigen::ArrayXd std_new = p.log_std.array().exp();
  const Eigen::ArrayXd var_new = std_new.square();

  constexpr double half_log_2pi = 0.9189385332046727;
  const double inv_m = 1.0 / static_cast<double>(m);

  LossTerms terms;
  Eigen::MatrixXd dmean;
  Eigen::VectorXd dlog_std;
  Eigen::RowVectorXd dvalue_raw;
  if (grads_out) {
    dmean = Eigen::MatrixXd::Zero(ad, m);
    dlog_std = Eigen::VectorXd::Zero(ad);
    dvalue_raw.resize(m);
  }

  for (long c = 0; c < m; ++c) {
    double logp_new = 0.0;
    for (int j = 0; j < ad; ++j) {
      const double z = (raw(j, c) - ev.mean(j, c)) / std_new(j);
      logp_new += -0.5 * z * z - p.log_std(j) - half_log_2pi;
    }
    const double ratio = std::exp(logp_new - logp_old(c));
    const double a = adv(c);
    const double unclipped = ratio * a;
    const double clipped =
        std::clamp(ratio, 1.0 - cfg.clip_param, 1.0 + cfg.clip_param) * a;
    terms.surrogate += std::min(unclipped, clipped);
    if (std::abs(ratio - 1.0) > cfg.clip_param) terms.clip_fraction += 1.0;

    double kl = 0.0;
    for (int j = 0; j < ad; ++j) {
      const double mu_d = old_mean(j, c) - ev.mean(j, c);
      kl += p.log_std(j) - std::log(old_std(j, c)) +
            (old_std(j, c) * old_std(j, c) + mu_d * mu_d) / (2.0 * var_new(j)) - 0.5;
    }
    terms.kl += kl;

    const double verr = ev.value_raw(c) - target_scaled(c);
    terms.value_mse += verr * verr;

    if (grads_out) {
      // Surrogate gradient flows only through the unclipped branch.
      const double dsurr_dlogp = unclipped <= clipped ? unclipped : 0.0;
      const double dtot_dlogp = -inv_m * dsurr_dlogp;
      for (int j = 0; j < ad; ++j) {
        const double diff = raw(j, c) - ev.mean(j, c);
        const double z2 = diff * diff / var_new(j);
        dmean(j, c) = dtot_dlogp * (diff / var_new(j));
        dlog_std(j) += dtot_dlogp * (z2 - 1.0);

        const double mu_d = ev.mean(j, c) - old_mean(j, c);
        dmean(j, c) += cfg.kl_coeff * inv_m * (mu_d / var_new(j));
        dlog_std(j) += cfg.kl_coeff * inv_m *
                       (1.0 - (old_std(j, c) * old_std(j, c) +
                               (old_mean(j, c) - ev.mean(j, c)) * (old_mean(j, c) - ev.mean(j, c))) /
                                  var_new(j));
      }
      dvalue_raw(c) = inv_m * verr;
    }
  }

  terms.surrogate *= inv_m;
  terms.kl *= inv_m;
  terms.value_mse *= inv_m;
  terms.clip_fraction *= inv_m;
  for (int j = 0; j < ad; ++j)
    terms.entropy += 0.5 * std::log(2.0 * M_PI * M_E) + p.log_std(j);
  terms.total = -terms.surrogate + cfg.kl_coeff * terms.kl + 0.5 * terms.value_mse;

  if (grads_out) {
    backprop(p, ev, dmean, dvalue_raw, *grads_out);
    grads_out->log_std += dlog_std;
  }
  return terms;
}

namespace {

std::string nan_report(const TransitionBatch& batch, const std::vector<long>& idx,
                       const LossTerms& terms) {
  std::ostringstream os;
  os << "ppo_update: non-finite loss (surrogate=" << terms.surrogate << " kl=" << terms.kl
     << " value_mse=" << terms.value_mse << "); minibatch of " << idx.size() << " from indices "
     << (idx.empty() ? 0 : idx.front()) << ".." << (idx.empty() ? 0 : idx.back());
  double adv_min = 0, adv_max = 0, lp_min = 0, lp_max = 0;
  for (std::size_t c = 0; c < idx.size(); ++c) {
    const long i = idx[c];
    adv_min = c == 0 ? batch.advantage(i) : std::min(adv_min, batch.advantage(i));
    adv_max = c == 0 ? batch.advantage(i) : std::max(adv_max, batch.advantage(i));
    lp_min = c == 0 ? batch.log_prob(i) : std::min(lp_min, batch.log_prob(i));
    lp_max = c == 0 ? batch.log_prob(i) : std::max(lp_max, batch.log_prob(i));
  }
  os << "; advantage range [" << adv_min << ", " << adv_max << "], behavior log-prob range ["
     << lp_min << ", " << lp_max << "]";
  return os.str();
}

}  // namespace

PpoStats ppo_update(PolicyParameters& p, AdamState& adam, const TransitionBatch& batch,
                    const PpoConfig& cfg, Rng& shuffle_rng) {
  cfg.validate();
  const long m = batch.size();
  if (m == 0) throw std::invalid_argument("ppo_update: empty batch");
  if (batch.advantage.size() != m)
    throw std::invalid_argument("ppo_update: compute_advantages must run first");

  std::vector<long> order(m);
  std::iota(order.begin(), order.end(), 0);

  const long chunks = std::max<long>(1, m / cfg.minibatch);
  PpoStats stats;

  for (int epoch = 0; epoch < cfg.sgd_iters; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    for (long c = 0; c < chunks; ++c) {
      const long begin = c * cfg.minibatch;
      const long end = c + 1 == chunks ? m : begin + cfg.minibatch;  // remainder folds into last
      const std::vector<long> idx(order.begin() + begin, order.begin() + end);

      ParamGrads grads = ParamGrads::zeros_like(p);
      const LossTerms terms = ppo_loss(p, batch, idx, cfg, &grads);
      if (!std::isfinite(terms.total)) throw std::runtime_error(nan_report(batch, idx, terms));

      adam_step(p, adam, grads, cfg.learning_rate);

      stats.policy_loss += -terms.surrogate;
      stats.value_loss += terms.value_mse;
      stats.kl += terms.kl;
      stats.entropy += terms.entropy;
      stats.clip_fraction += terms.clip_fraction;
      stats.total_loss += terms.total;
      stats.updates += 1;
    }
  }

  const double n = std::max(1, stats.updates);
  stats.policy_loss /= n;
  stats.value_loss /= n;
  stats.kl /= n;
  stats.entropy /= n;
  stats.clip_fraction /= n;
  stats.total_loss /= n;
  return stats;
}

}  // namespace swarm
