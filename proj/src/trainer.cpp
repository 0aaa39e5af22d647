#include "swarm/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "swarm/binio.hpp"

namespace swarm {
namespace {

// Seed streams per pool build. Env dynamics and action sampling draw from
// separate generators so the observation noise sequence does not depend on
// the policy's action dimension.
std::uint64_t iter_base(std::uint64_t master, long iteration) {
  return mix_seed(master, 0xC0117EC7ULL + static_cast<std::uint64_t>(iteration));
}

struct Stretch {
  int agent = 0;
  long t0 = 0;
  long len = 0;
  bool terminal = false;
  double bootstrap = 0.0;
};

struct WorkerOut {
  Eigen::MatrixXd obs, raw, mean, old_std;  // column (t * agents + i)
  Eigen::VectorXd logp, reward, value;
  std::vector<Stretch> stretches;
  std::vector<EpisodeRecord> episodes;  // end_step holds the local step t+1
};

// Advances one runner by `steps` env steps. Observations are drawn fresh at
// the top of every step, so the draw sequence is identical whether the
// previous iteration ran in this process or was restored from a checkpoint.
WorkerOut run_env_worker(const PolicyParameters& params, EnvRunner& runner, long steps) {
  EnvBase& env = *runner.env;
  const int agents = env.agents();
  const int od = env.obs_dim();
  const int ad = env.action_dim();
  const long cols = steps * agents;
  const Eigen::VectorXd std_now = params.log_std.array().exp();

  WorkerOut out;
  out.obs.resize(od, cols);
  out.raw.resize(ad, cols);
  out.mean.resize(ad, cols);
  out.old_std.resize(ad, cols);
  out.logp.resize(cols);
  out.reward.resize(cols);
  out.value.resize(cols);

  long stretch_start = 0;
  auto close_stretch = [&](long t_end, bool terminal, const Eigen::VectorXd& bootstrap) {
    for (int i = 0; i < agents; ++i) {
      Stretch s;
      s.agent = i;
      s.t0 = stretch_start;
      s.len = t_end - stretch_start;
      s.terminal = terminal;
      s.bootstrap = terminal ? 0.0 : bootstrap(i);
      if (s.len > 0) out.stretches.push_back(s);
    }
    stretch_start = t_end;
  };

  for (long t = 0; t < steps; ++t) {
    const Eigen::MatrixXd obs = env.observe();
    const BatchEval ev = forward_batch(params, obs);

    Eigen::MatrixXd commands(ad, agents);
    for (int i = 0; i < agents; ++i) {
      const long c = t * agents + i;
      Eigen::VectorXd raw(ad);
      for (int j = 0; j < ad; ++j) raw(j) = runner.act_rng.normal(ev.mean(j, i), std_now(j));
      out.obs.col(c) = obs.col(i);
      out.raw.col(c) = raw;
      out.mean.col(c) = ev.mean.col(i);
      out.old_std.col(c) = std_now;
      out.logp(c) = gaussian_log_prob(raw, ev.mean.col(i), std_now);
      out.value(c) = ev.value_raw(i) * params.value_scale;
      commands.col(i) = clip_command(raw.cwiseProduct(params.action_scale), params);
    }

    const EnvBase::StepResult res = env.step(commands);
    for (int i = 0; i < agents; ++i) out.reward(t * agents + i) = res.rewards(i);
    runner.returns += res.rewards;
    runner.collisions += res.collisions;

    if (res.done) {
      EpisodeRecord rec;
      rec.end_step = t + 1;
      rec.mean_return = runner.returns.mean();
      rec.agents = agents;
      rec.collisions = runner.collisions;
      rec.task_complete = res.task_complete;
      out.episodes.push_back(rec);
      runner.returns.setZero();
      runner.collisions = 0;

      Eigen::VectorXd bootstrap = Eigen::VectorXd::Zero(agents);
      if (!res.task_complete) {
        // Horizon truncation: bootstrap from the final state's value.
        const BatchEval fin = forward_batch(params, env.observe());
        bootstrap = fin.value_raw.transpose() * params.value_scale;
      }
      close_stretch(t + 1, res.task_complete, bootstrap);

      env.reset(mix_seed(runner.reseed_base, static_cast<std::uint64_t>(++runner.episode)));
    }
  }

  if (stretch_start < steps) {
    // Batch window ended mid-episode: truncate with a value bootstrap. The
    // episode itself stays live in the runner for the next iteration.
    const BatchEval fin = forward_batch(params, env.observe());
    close_stretch(steps, false, fin.value_raw.transpose() * params.value_scale);
  }
  return out;
}

}  // namespace

EnvPool EnvPool::build(const Config& cfg, int agents, long iteration) {
  const std::uint64_t base = iter_base(cfg.scenario.seed, iteration);
  EnvPool pool;
  pool.agents = agents;
  pool.runners.resize(cfg.num_envs);
  for (int e = 0; e < cfg.num_envs; ++e) {
    EnvRunner& r = pool.runners[e];
    r.reseed_base = mix_seed(base, 2 * static_cast<std::uint64_t>(e));
    Config env_cfg = cfg;
    env_cfg.scenario.agents = agents;
    env_cfg.scenario.seed = mix_seed(r.reseed_base, 0);
    r.env = make_environment(env_cfg, agents);
    r.act_rng = Rng(mix_seed(base, 2 * static_cast<std::uint64_t>(e) + 1));
    r.episode = 0;
    r.returns = Eigen::VectorXd::Zero(agents);
    r.collisions = 0;
  }
  return pool;
}

std::string EnvPool::serialize() const {
  std::ostringstream os(std::ios::binary);
  binio::write_raw<std::int32_t>(os, static_cast<std::int32_t>(runners.size()));
  binio::write_raw<std::int32_t>(os, agents);
  for (const EnvRunner& r : runners) {
    binio::write_raw<std::uint64_t>(os, r.reseed_base);
    binio::write_raw<std::int64_t>(os, r.episode);
    binio::write_raw<std::int32_t>(os, static_cast<std::int32_t>(r.returns.size()));
    for (long i = 0; i < r.returns.size(); ++i) binio::write_raw<double>(os, r.returns(i));
    binio::write_raw<std::int32_t>(os, r.collisions);
    std::ostringstream eng;
    eng << r.act_rng.engine();
    binio::write_string(os, eng.str());
    r.env->save_state(os);
  }
  return os.str();
}

EnvPool EnvPool::restore(const Config& cfg, const std::string& blob) {
  std::istringstream is(blob, std::ios::binary);
  const auto count = binio::read_raw<std::int32_t>(is);
  EnvPool pool;
  pool.agents = binio::read_raw<std::int32_t>(is);
  if (count != cfg.num_envs)
    throw std::runtime_error("EnvPool::restore: env count does not match the config");
  pool.runners.resize(count);
  for (EnvRunner& r : pool.runners) {
    r.reseed_base = binio::read_raw<std::uint64_t>(is);
    r.episode = binio::read_raw<std::int64_t>(is);
    const auto n = binio::read_raw<std::int32_t>(is);
    r.returns.resize(n);
    for (int i = 0; i < n; ++i) r.returns(i) = binio::read_raw<double>(is);
    r.collisions = binio::read_raw<std::int32_t>(is);
    std::istringstream eng(binio::read_string(is));
    eng >> r.act_rng.engine();
    if (!eng) throw std::runtime_error("EnvPool::restore: bad rng state");
    Config env_cfg = cfg;
    env_cfg.scenario.agents = pool.agents;
    env_cfg.scenario.seed = mix_seed(r.reseed_base, 0);
    r.env = make_environment(env_cfg, pool.agents);
    r.env->load_state(is);
  }
  return pool;
}

TransitionBatch collect_rollouts(const PolicyParameters& params, const Config& cfg, EnvPool& pool,
                                 std::vector<EpisodeRecord>* episodes, long steps_before) {
  const int envs = static_cast<int>(pool.runners.size());
  const int agents = pool.agents;
  const long per_env_agents = static_cast<long>(envs) * agents;
  const long steps = (cfg.ppo.train_batch + per_env_agents - 1) / per_env_agents;

  std::vector<WorkerOut> outs(envs);
  auto work = [&](int e) { outs[e] = run_env_worker(params, pool.runners[e], steps); };

  if (cfg.rollout_threads > 1) {
    std::vector<std::thread> threads;
    std::atomic<int> next{0};
    const int workers = std::min<int>(cfg.rollout_threads, envs);
    for (int w = 0; w < workers; ++w)
      threads.emplace_back([&] {
        for (int e = next.fetch_add(1); e < envs; e = next.fetch_add(1)) work(e);
      });
    for (auto& th : threads) th.join();
  } else {
    for (int e = 0; e < envs; ++e) work(e);
  }

  const long m = steps * per_env_agents;
  const int od = static_cast<int>(outs[0].obs.rows());
  const int ad = static_cast<int>(outs[0].raw.rows());

  TransitionBatch batch;
  batch.obs.resize(od, m);
  batch.raw_action.resize(ad, m);
  batch.old_mean.resize(ad, m);
  batch.old_std.resize(ad, m);
  batch.log_prob.resize(m);
  batch.reward.resize(m);
  batch.value.resize(m);

  // Merge in env order, stretch by stretch, so segments are contiguous and
  // the layout does not depend on worker scheduling.
  long cursor = 0;
  for (int e = 0; e < envs; ++e) {
    const WorkerOut& w = outs[e];
    for (const Stretch& s : w.stretches) {
      Segment seg;
      seg.start = cursor;
      seg.len = s.len;
      seg.terminal = s.terminal;
      seg.bootstrap_value = s.bootstrap;
      for (long u = 0; u < s.len; ++u) {
        const long src = (s.t0 + u) * agents + s.agent;
        batch.obs.col(cursor) = w.obs.col(src);
        batch.raw_action.col(cursor) = w.raw.col(src);
        batch.old_mean.col(cursor) = w.mean.col(src);
        batch.old_std.col(cursor) = w.old_std.col(src);
        batch.log_prob(cursor) = w.logp(src);
        batch.reward(cursor) = w.reward(src);
        batch.value(cursor) = w.value(src);
        ++cursor;
      }
      batch.segments.push_back(seg);
    }
    if (episodes) {
      for (EpisodeRecord rec : w.episodes) {
        rec.end_step = steps_before + rec.end_step * per_env_agents;
        episodes->push_back(rec);
      }
    }
  }
  if (cursor != m) throw std::logic_error("collect_rollouts: stretch bookkeeping mismatch");
  return batch;
}

TrainResult train(const TrainOptions& opt) {
  const Config& cfg = opt.config;
  cfg.validate();
  const CurriculumSchedule schedule = derive_curriculum(cfg);
  const std::uint64_t fingerprint = config_fingerprint(cfg);

  std::filesystem::create_directories(opt.out_dir);
  std::ofstream log(std::filesystem::path(opt.out_dir) / "train_log.jsonl", std::ios::app);
  if (!log) throw std::runtime_error("train: cannot open train_log.jsonl");

  // Probe dims through a temporary env at the smallest agent count.
  const int probe_agents = schedule.entries.front().agents;
  const int od = make_environment(cfg, probe_agents)->obs_dim();
  const int ad = cfg.scenario.dimension + 1;
  const Conditioning cond = policy_conditioning(cfg);

  PolicyParameters params;
  AdamState adam;
  EnvPool pool;
  long iteration = 0;
  long steps_done = 0;
  if (opt.resume_from.empty()) {
    params = init_policy(od, ad, cond.obs_scale, cond.action_scale, cond.value_scale,
                         mix_seed(cfg.scenario.seed, 0x1417ULL));
    adam = AdamState::zeros_like(params);
  } else {
    Checkpoint ckpt = load_checkpoint(opt.resume_from);
    if (ckpt.config_fingerprint != fingerprint)
      throw std::runtime_error("train: checkpoint belongs to a different config");
    if (!ckpt.has_adam)
      throw std::runtime_error("train: checkpoint lacks optimizer state, cannot resume");
    if (ckpt.trainer_state.empty())
      throw std::runtime_error("train: checkpoint lacks rollout state, cannot resume");
    params = std::move(ckpt.params);
    adam = std::move(ckpt.adam);
    iteration = ckpt.iteration;
    steps_done = ckpt.steps_done;
    pool = EnvPool::restore(cfg, ckpt.trainer_state);
  }

  TrainResult result;
  result.steps_done = steps_done;

  auto save = [&](long iter_next) {
    char name[32];
    std::snprintf(name, sizeof(name), "checkpoint_%06ld.ckpt", iter_next);
    const std::string path = (std::filesystem::path(opt.out_dir) / name).string();
    Checkpoint ckpt;
    ckpt.params = params;
    ckpt.adam = adam;
    ckpt.has_adam = true;
    ckpt.config_fingerprint = fingerprint;
    ckpt.iteration = iter_next;
    ckpt.steps_done = steps_done;
    ckpt.trainer_state = pool.serialize();
    save_checkpoint(path, ckpt);
    result.final_checkpoint = path;
  };

  long iterations_this_run = 0;
  while (steps_done < cfg.ppo.total_steps &&
         (opt.max_iterations == 0 || iterations_this_run < opt.max_iterations)) {
    ++iterations_this_run;
    const auto t0 = std::chrono::steady_clock::now();
    const int agents = curriculum_agent_count(schedule, steps_done);
    if (pool.runners.empty() || pool.agents != agents) pool = EnvPool::build(cfg, agents, iteration);

    std::vector<EpisodeRecord> episodes;
    TransitionBatch batch = collect_rollouts(params, cfg, pool, &episodes, steps_done);
    compute_advantages(batch, cfg.ppo.gamma, cfg.ppo.gae_lambda);

    Rng shuffle_rng(mix_seed(cfg.scenario.seed, 0x5F0FULL + static_cast<std::uint64_t>(iteration)));
    const PpoStats stats = ppo_update(params, adam, batch, cfg.ppo, shuffle_rng);

    steps_done += batch.size();
    iteration += 1;

    IterationStats it;
    it.iteration = iteration;
    it.steps_done = steps_done;
    it.agents = agents;
    it.batch = batch.size();
    it.reward_mean = batch.reward.mean();
    it.episodes = static_cast<long>(episodes.size());
    for (const auto& e : episodes) {
      it.episode_return_mean += e.mean_return;
      it.episode_collision_mean += e.collisions;
    }
    if (!episodes.empty()) {
      it.episode_return_mean /= static_cast<double>(episodes.size());
      it.episode_collision_mean /= static_cast<double>(episodes.size());
    }
    it.ppo = stats;
    it.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    result.iterations.push_back(it);
    for (const auto& e : episodes) result.episodes.push_back(e);
    result.steps_done = steps_done;

    log << nlohmann::json{{"iter", it.iteration},
                          {"steps", it.steps_done},
                          {"agents", it.agents},
                          {"batch", it.batch},
                          {"reward_mean", it.reward_mean},
                          {"episodes", it.episodes},
                          {"episode_return_mean", it.episode_return_mean},
                          {"collisions_per_episode", it.episode_collision_mean},
                          {"kl", stats.kl},
                          {"entropy", stats.entropy},
                          {"policy_loss", stats.policy_loss},
                          {"value_loss", stats.value_loss},
                          {"clip_fraction", stats.clip_fraction},
                          {"wall_s", it.wall_s}}
               .dump()
        << '\n';
    log.flush();

    if (!opt.quiet)
      std::printf("iter %ld steps %ld agents %d reward %.3f episodes %ld return %.1f kl %.4f\n",
                  it.iteration, it.steps_done, it.agents, it.reward_mean, it.episodes,
                  it.episode_return_mean, stats.kl);

    if (iteration % cfg.checkpoint_every == 0 || steps_done >= cfg.ppo.total_steps)
      save(iteration);
  }

  if (result.final_checkpoint.empty()) save(iteration);
  return result;
}

}  // namespace swarm
