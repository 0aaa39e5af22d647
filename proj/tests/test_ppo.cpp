#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "swarm/policy.hpp"
#include "swarm/ppo.hpp"
#include "swarm/rng.hpp"

using namespace swarm;

namespace {

PolicyParameters make_policy(int obs_dim, int action_dim, std::uint64_t seed,
                             double value_scale = 50.0) {
  Eigen::VectorXd os = Eigen::VectorXd::Ones(obs_dim) * 2.0;
  Eigen::VectorXd as = Eigen::VectorXd::Ones(action_dim) * 30.0;
  return init_policy(obs_dim, action_dim, os, as, value_scale, seed);
}

void zero_network(PolicyParameters& p) {
  visit_params(p, [](const char* name, auto& t) {
    if (std::string(name) != "log_std") t.setZero();
  });
}

std::vector<double*> flat_view(PolicyParameters& p) {
  std::vector<double*> out;
  visit_params(p, [&](const char*, auto& t) {
    for (Eigen::Index c = 0; c < t.cols(); ++c)
      for (Eigen::Index r = 0; r < t.rows(); ++r) out.push_back(&t(r, c));
  });
  return out;
}

std::vector<double> flat_values(ParamGrads& g) {
  std::vector<double> out;
  visit_params(g, [&](const char*, auto& t) {
    for (Eigen::Index c = 0; c < t.cols(); ++c)
      for (Eigen::Index r = 0; r < t.rows(); ++r) out.push_back(t(r, c));
  });
  return out;
}

double scalar_log_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                       const Eigen::VectorXd& sd) {
  double lp = 0.0;
  for (int j = 0; j < x.size(); ++j) {
    const double z = (x(j) - mu(j)) / sd(j);
    lp += -0.5 * z * z - std::log(sd(j)) - 0.5 * std::log(2.0 * std::acos(-1.0));
  }
  return lp;
}

// Batch drawn from the policy itself so ratios start at one. Behavior stats
// come from the batched forward pass, the same kernel the update evaluates,
// so recorded means are bitwise comparable.
TransitionBatch self_batch(const PolicyParameters& p, int m, std::uint64_t seed) {
  const int od = p.obs_dim();
  const int ad = p.action_dim();
  Rng rng(seed);

  TransitionBatch b;
  b.obs.resize(od, m);
  for (int c = 0; c < m; ++c)
    for (int r = 0; r < od; ++r) b.obs(r, c) = rng.uniform(-2.0, 2.0);

  const BatchEval ev = forward_batch(p, b.obs);
  const Eigen::VectorXd sd = p.log_std.array().exp();

  b.raw_action.resize(ad, m);
  b.log_prob.resize(m);
  b.old_mean = ev.mean;
  b.old_std.resize(ad, m);
  b.reward.resize(m);
  b.value.resize(m);
  for (int c = 0; c < m; ++c) {
    for (int j = 0; j < ad; ++j) b.raw_action(j, c) = ev.mean(j, c) + sd(j) * rng.normal(0, 1);
    b.old_std.col(c) = sd;
    b.log_prob(c) = gaussian_log_prob(b.raw_action.col(c), ev.mean.col(c), sd);
    b.reward(c) = rng.uniform(-1.0, 1.0);
    b.value(c) = ev.value_raw(c) * p.value_scale;
  }
  Segment seg;
  seg.start = 0;
  seg.len = m;
  seg.terminal = true;
  b.segments.push_back(seg);
  return b;
}

}  // namespace

TEST_CASE("GAE matches the hand recursion on mixed segments") {
  TransitionBatch b;
  const int m = 5;
  b.obs.resize(1, m);
  b.raw_action.resize(1, m);
  b.log_prob.setZero(m);
  b.old_mean.setZero(1, m);
  b.old_std.setOnes(1, m);
  b.reward.resize(m);
  b.value.resize(m);
  b.reward << 1.0, -0.5, 2.0, 0.3, 0.7;
  b.value << 0.2, 0.4, -0.1, 0.9, 0.5;

  Segment s0;  // transitions 0..2, episode ended
  s0.start = 0;
  s0.len = 3;
  s0.terminal = true;
  Segment s1;  // transitions 3..4, cut off, bootstraps 1.3
  s1.start = 3;
  s1.len = 2;
  s1.terminal = false;
  s1.bootstrap_value = 1.3;
  b.segments = {s0, s1};

  const double gamma = 0.9, lambda = 0.8;
  compute_advantages(b, gamma, lambda);

  // Hand recursion, backward per segment.
  double raw[5];
  {
    const double d2 = 2.0 + 0.0 - (-0.1);
    const double d1 = -0.5 + gamma * (-0.1) - 0.4;
    const double d0 = 1.0 + gamma * 0.4 - 0.2;
    raw[2] = d2;
    raw[1] = d1 + gamma * lambda * raw[2];
    raw[0] = d0 + gamma * lambda * raw[1];
    const double d4 = 0.7 + gamma * 1.3 - 0.5;
    const double d3 = 0.3 + gamma * 0.5 - 0.9;
    raw[4] = d4;
    raw[3] = d3 + gamma * lambda * raw[4];
  }

  for (int i = 0; i < m; ++i)
    CHECK(b.value_target(i) - b.value(i) == doctest::Approx(raw[i]).epsilon(1e-10));

  double mean = 0.0;
  for (double r : raw) mean += r / m;
  double var = 0.0;
  for (double r : raw) var += (r - mean) * (r - mean) / m;
  const double sd = std::sqrt(var) + 1e-8;
  for (int i = 0; i < m; ++i)
    CHECK(b.advantage(i) == doctest::Approx((raw[i] - mean) / sd).epsilon(1e-10));

  // Normalization invariants.
  CHECK(std::abs(b.advantage.mean()) < 1e-12);
  const double nvar = (b.advantage.array() - b.advantage.mean()).square().sum() / m;
  CHECK(std::sqrt(nvar) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("single terminal transition gets its reward as the target") {
  TransitionBatch b;
  b.obs.resize(1, 1);
  b.raw_action.resize(1, 1);
  b.log_prob.setZero(1);
  b.old_mean.setZero(1, 1);
  b.old_std.setOnes(1, 1);
  b.reward.resize(1);
  b.reward << 4.2;
  b.value.resize(1);
  b.value << -0.7;
  Segment s;
  s.start = 0;
  s.len = 1;
  s.terminal = true;
  b.segments = {s};

  compute_advantages(b, 0.99, 0.95);
  CHECK(b.value_target(0) == doctest::Approx(4.2).epsilon(1e-12));
}

TEST_CASE("gamma zero reduces targets to immediate rewards") {
  TransitionBatch b;
  const int m = 4;
  b.obs.resize(1, m);
  b.raw_action.resize(1, m);
  b.log_prob.setZero(m);
  b.old_mean.setZero(1, m);
  b.old_std.setOnes(1, m);
  b.reward.resize(m);
  b.reward << 1.0, 2.0, 3.0, 4.0;
  b.value.setZero(m);
  Segment s;
  s.start = 0;
  s.len = m;
  s.terminal = false;
  s.bootstrap_value = 9.0;
  b.segments = {s};

  compute_advantages(b, 0.0, 0.95);
  for (int i = 0; i < m; ++i) CHECK(b.value_target(i) == doctest::Approx(b.reward(i)).epsilon(1e-12));
}

TEST_CASE("lambda one telescopes to the discounted return") {
  TransitionBatch b;
  const int m = 6;
  b.obs.resize(1, m);
  b.raw_action.resize(1, m);
  b.log_prob.setZero(m);
  b.old_mean.setZero(1, m);
  b.old_std.setOnes(1, m);
  b.reward.resize(m);
  b.value.resize(m);
  Rng rng(555);
  for (int i = 0; i < m; ++i) {
    b.reward(i) = rng.uniform(-2.0, 2.0);
    b.value(i) = rng.uniform(-1.0, 1.0);
  }
  Segment s;
  s.start = 0;
  s.len = m;
  s.terminal = true;
  b.segments = {s};

  const double gamma = 0.97;
  compute_advantages(b, gamma, 1.0);

  double ret = 0.0;
  for (int i = m - 1; i >= 0; --i) ret = b.reward(i) + gamma * ret;
  CHECK(b.value_target(0) == doctest::Approx(ret).epsilon(1e-8));
}

TEST_CASE("loss terms match a scalar recomputation on a zeroed network") {
  const int od = 4, ad = 2, m = 3;
  PolicyParameters p = make_policy(od, ad, 7, 50.0);
  zero_network(p);
  p.log_std << -0.5, -0.2;

  TransitionBatch b;
  b.obs = Eigen::MatrixXd::Random(od, m);
  b.raw_action.resize(ad, m);
  b.raw_action << 0.3, 1.1, -0.4, -0.7, 0.2, 0.9;
  b.old_mean.resize(ad, m);
  b.old_mean << 0.1, 0.05, -0.15, -0.2, 0.3, 0.0;
  b.old_std.resize(ad, m);
  b.old_std << 0.8, 0.9, 1.0, 1.2, 0.7, 1.1;
  b.log_prob.resize(m);
  for (int c = 0; c < m; ++c)
    b.log_prob(c) = scalar_log_prob(b.raw_action.col(c), b.old_mean.col(c), b.old_std.col(c));
  b.reward.setZero(m);
  b.value.setZero(m);
  b.advantage.resize(m);
  b.advantage << 1.5, -2.0, 0.5;
  b.value_target.resize(m);
  b.value_target << 25.0, -10.0, 40.0;

  PpoConfig cfg;
  cfg.clip_param = 0.3;
  cfg.kl_coeff = 0.2;

  std::vector<long> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  const LossTerms t = ppo_loss(p, b, idx, cfg, nullptr);

  // Scalar oracle. New policy: mean zero, std exp(log_std).
  const double sn[2] = {std::exp(-0.5), std::exp(-0.2)};
  double surr = 0.0, kl = 0.0, mse = 0.0;
  for (int c = 0; c < m; ++c) {
    double lp_new = 0.0;
    for (int j = 0; j < ad; ++j) {
      const double z = b.raw_action(j, c) / sn[j];
      lp_new += -0.5 * z * z - std::log(sn[j]) - 0.5 * std::log(2.0 * std::acos(-1.0));
    }
    const double ratio = std::exp(lp_new - b.log_prob(c));
    const double a = b.advantage(c);
    const double clipped = std::clamp(ratio, 0.7, 1.3) * a;
    surr += std::min(ratio * a, clipped) / m;

    for (int j = 0; j < ad; ++j) {
      const double so = b.old_std(j, c), mo = b.old_mean(j, c);
      kl += (std::log(sn[j] / so) + (so * so + mo * mo) / (2.0 * sn[j] * sn[j]) - 0.5) / m;
    }
    const double verr = 0.0 - b.value_target(c) / p.value_scale;
    mse += verr * verr / m;
  }
  double ent = 0.0;
  for (int j = 0; j < ad; ++j) ent += 0.5 * std::log(2.0 * std::acos(-1.0) * std::exp(1.0)) + p.log_std(j);

  CHECK(t.surrogate == doctest::Approx(surr).epsilon(1e-9));
  CHECK(t.kl == doctest::Approx(kl).epsilon(1e-9));
  CHECK(t.value_mse == doctest::Approx(mse).epsilon(1e-9));
  CHECK(t.entropy == doctest::Approx(ent).epsilon(1e-9));
  CHECK(t.total == doctest::Approx(-surr + cfg.kl_coeff * kl + 0.5 * mse).epsilon(1e-9));
}

TEST_CASE("analytic loss gradient matches finite differences") {
  const int od = 5, ad = 3, m = 12;
  PolicyParameters p = make_policy(od, ad, 21, 40.0);
  TransitionBatch b = self_batch(p, m, 99);
  compute_advantages(b, 0.99, 0.95);

  PpoConfig cfg;
  std::vector<long> idx(m);
  std::iota(idx.begin(), idx.end(), 0);

  ParamGrads grads = ParamGrads::zeros_like(p);
  ppo_loss(p, b, idx, cfg, &grads);
  std::vector<double> an = flat_values(grads);
  std::vector<double*> slots = flat_view(p);
  REQUIRE(slots.size() == an.size());

  Rng pick(3);
  int ok = 0;
  const int trials = 150;
  const double h = 1e-6;
  for (int t = 0; t < trials; ++t) {
    const std::size_t i = pick.below(slots.size());
    const double keep = *slots[i];
    *slots[i] = keep + h;
    const double up = ppo_loss(p, b, idx, cfg, nullptr).total;
    *slots[i] = keep - h;
    const double dn = ppo_loss(p, b, idx, cfg, nullptr).total;
    *slots[i] = keep;
    const double fd = (up - dn) / (2.0 * h);
    const double scale = std::max({std::abs(fd), std::abs(an[i]), 1e-7});
    if (std::abs(fd - an[i]) <= 1e-5 * scale) ++ok;
  }
  CHECK(ok >= trials - 2);
}

TEST_CASE("zero advantages leave the policy head untouched") {
  const int od = 6, ad = 3, m = 40;
  PolicyParameters p = make_policy(od, ad, 77, 30.0);
  TransitionBatch b = self_batch(p, m, 31);
  b.advantage.setZero(m);
  b.value_target = b.value.array() + 100.0;

  PolicyParameters before = p;
  AdamState adam = AdamState::zeros_like(p);
  PpoConfig cfg;
  cfg.minibatch = 20;
  cfg.train_batch = 40;
  cfg.sgd_iters = 3;
  Rng shuffle(5);
  ppo_update(p, adam, b, cfg, shuffle);

  CHECK((p.pi.w[0] - before.pi.w[0]).norm() == 0.0);
  CHECK((p.pi.w[1] - before.pi.w[1]).norm() == 0.0);
  CHECK((p.pi.w[2] - before.pi.w[2]).norm() == 0.0);
  CHECK((p.pi.b[0] - before.pi.b[0]).norm() == 0.0);
  CHECK((p.log_std - before.log_std).norm() == 0.0);
  CHECK((p.vf.w[2] - before.vf.w[2]).norm() > 0.0);
}

TEST_CASE("identical policies give unit ratios") {
  const int od = 4, ad = 2, m = 16;
  PolicyParameters p = make_policy(od, ad, 13, 25.0);
  TransitionBatch b = self_batch(p, m, 77);
  b.advantage.resize(m);
  Rng rng(6);
  for (int i = 0; i < m; ++i) b.advantage(i) = rng.uniform(-2.0, 2.0);
  b.value_target = b.value;

  PpoConfig cfg;
  std::vector<long> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  const LossTerms t = ppo_loss(p, b, idx, cfg, nullptr);

  CHECK(std::abs(t.kl) <= 1e-15);
  CHECK(t.clip_fraction == 0.0);
  CHECK(t.surrogate == doctest::Approx(b.advantage.mean()).epsilon(1e-9));
  CHECK(t.value_mse <= 1e-24);
}

TEST_CASE("non-finite loss is rejected with a report") {
  const int od = 4, ad = 2, m = 8;
  PolicyParameters p = make_policy(od, ad, 3, 25.0);
  TransitionBatch b = self_batch(p, m, 4);
  b.reward(3) = std::numeric_limits<double>::quiet_NaN();
  compute_advantages(b, 0.99, 0.95);

  AdamState adam = AdamState::zeros_like(p);
  PpoConfig cfg;
  cfg.minibatch = 8;
  cfg.train_batch = 8;
  cfg.sgd_iters = 1;
  Rng shuffle(1);
  CHECK_THROWS_AS(ppo_update(p, adam, b, cfg, shuffle), std::runtime_error);
}

TEST_CASE("update runs the expected minibatch count") {
  const int od = 4, ad = 2, m = 30;
  PolicyParameters p = make_policy(od, ad, 9, 25.0);
  TransitionBatch b = self_batch(p, m, 11);
  compute_advantages(b, 0.99, 0.95);

  AdamState adam = AdamState::zeros_like(p);
  PpoConfig cfg;
  cfg.minibatch = 8;   // 30 / 8 -> 3 chunks, remainder folds into the last
  cfg.train_batch = 32;
  cfg.sgd_iters = 4;
  Rng shuffle(2);
  const PpoStats stats = ppo_update(p, adam, b, cfg, shuffle);
  CHECK(stats.updates == 12);
  CHECK(adam.t == 12);
}

TEST_CASE("config validation") {
  PpoConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  cfg.minibatch = 2600;  // does not divide 50000
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = PpoConfig{};
  cfg.clip_param = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = PpoConfig{};
  cfg.gamma = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = PpoConfig{};
  cfg.gae_lambda = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = PpoConfig{};
  cfg.minibatch = 60000;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
