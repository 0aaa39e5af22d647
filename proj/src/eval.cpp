#include "swarm/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "swarm/environment.hpp"
#include "swarm/fmp.hpp"
#include "swarm/orca.hpp"

namespace swarm {

std::string to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::policy: return "policy";
    case ControllerKind::orca: return "orca";
    case ControllerKind::fmp: return "fmp";
    case ControllerKind::straight: return "straight";
  }
  return "unknown";
}

ControllerKind controller_from_string(const std::string& s) {
  if (s == "policy") return ControllerKind::policy;
  if (s == "orca") return ControllerKind::orca;
  if (s == "fmp") return ControllerKind::fmp;
  if (s == "straight") return ControllerKind::straight;
  throw std::invalid_argument("unknown controller '" + s + "', want policy|orca|fmp|straight");
}

namespace {

template <int Dim>
EpisodeTrace run_episode_impl(const Config& cfg, ControllerKind kind,
                              const PolicyParameters* policy, const std::string& ckpt_label) {
  const int n = cfg.scenario.agents;
  const IntegratorMode mode =
      kind == ControllerKind::policy || !cfg.baseline_single_integrator
          ? IntegratorMode::double_integrator
          : IntegratorMode::single_integrator;
  Environment<Dim> env(cfg.scenario, cfg.phys, cfg.noise, cfg.sensor_range, cfg.k_nearest, mode);

  if (kind == ControllerKind::policy) {
    if (!policy) throw std::invalid_argument("run_episode: policy controller needs parameters");
    if (policy->obs_dim() != env.obs_dim() || policy->action_dim() != env.action_dim())
      throw std::invalid_argument("run_episode: checkpoint dims do not fit this config");
  }

  EpisodeTrace trace;
  trace.header.config = config_entries(cfg);
  trace.header.fingerprint = config_fingerprint(cfg);
  trace.header.seed = cfg.scenario.seed;
  trace.header.controller = to_string(kind);
  trace.header.checkpoint = ckpt_label;
  trace.header.dimension = Dim;
  trace.header.agents = n;

  const auto t0 = std::chrono::steady_clock::now();
  auto snapshot_state = [&](TraceStep& row) {
    const SwarmState<Dim>& st = env.state();
    row.step = st.step;
    row.position.resize(static_cast<std::size_t>(n) * Dim);
    row.velocity.resize(static_cast<std::size_t>(n) * Dim);
    row.goal.resize(static_cast<std::size_t>(n) * Dim);
    row.yaw.resize(n);
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < Dim; ++c) {
        row.position[static_cast<std::size_t>(i) * Dim + c] = st.agents[i].position[c];
        row.velocity[static_cast<std::size_t>(i) * Dim + c] = st.agents[i].velocity[c];
        row.goal[static_cast<std::size_t>(i) * Dim + c] = st.agents[i].goal[c];
      }
      row.yaw[i] = st.agents[i].yaw;
    }
  };

  while (true) {
    std::vector<RawObservation<Dim>> raws = env.sense_raw();

    Eigen::MatrixXd commands = Eigen::MatrixXd::Zero(Dim + 1, n);
    switch (kind) {
      case ControllerKind::policy: {
        const Eigen::MatrixXd obs = env.flatten(raws);
        for (int i = 0; i < n; ++i) commands.col(i) = act_deterministic(*policy, obs.col(i));
        break;
      }
      case ControllerKind::straight: {
        for (int i = 0; i < n; ++i)
          commands.col(i).template head<Dim>() = straight_line_velocity<Dim>(
              goal_offset_from_observation(raws[i]), cfg.phys.v_max, cfg.scenario.capture_radius);
        break;
      }
      case ControllerKind::fmp: {
        for (int i = 0; i < n; ++i)
          commands.col(i).template head<Dim>() =
              fmp_velocity<Dim>(raws[i].neighbors, goal_offset_from_observation(raws[i]), cfg.fmp);
        break;
      }
      case ControllerKind::orca: {
        for (int i = 0; i < n; ++i) {
          const Vec<Dim> pref = straight_line_velocity<Dim>(
              goal_offset_from_observation(raws[i]),
              std::min(cfg.orca.max_speed, cfg.phys.v_max), cfg.scenario.capture_radius);
          commands.col(i).template head<Dim>() =
              orca_velocity(Vec<Dim>(raws[i].own_velocity), raws[i].neighbors, pref, cfg.orca)
                  .velocity;
        }
        break;
      }
    }

    TraceStep row;
    snapshot_state(row);
    row.action.assign(commands.data(), commands.data() + commands.size());

    const EnvBase::StepResult res = env.step(commands);
    row.reward.assign(res.rewards.data(), res.rewards.data() + res.rewards.size());
    row.collected = res.collected;
    row.reached = res.reached;
    trace.steps.push_back(std::move(row));

    if (res.done) break;
  }

  // Terminal state row: empty action and reward, arrival flags filled.
  TraceStep last;
  snapshot_state(last);
  const DoneFlags flags = episode_done<Dim>(env.state(), cfg.scenario);
  for (int i = 0; i < n; ++i)
    if (flags.reached[i]) last.reached.push_back(i);
  trace.steps.push_back(std::move(last));

  trace.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return trace;
}

}  // namespace

EpisodeTrace run_episode(const Config& cfg, ControllerKind kind, const PolicyParameters* policy,
                         std::uint64_t seed, const std::string& checkpoint_label) {
  Config run_cfg = cfg;
  run_cfg.scenario.seed = seed;
  run_cfg.validate();
  if (run_cfg.scenario.dimension == 2)
    return run_episode_impl<2>(run_cfg, kind, policy, checkpoint_label);
  return run_episode_impl<3>(run_cfg, kind, policy, checkpoint_label);
}

EvalResult evaluate(const EvalOptions& opt) {
  if (opt.runs < 1) throw std::invalid_argument("evaluate: runs must be >= 1");

  PolicyParameters params;
  const PolicyParameters* policy = nullptr;
  if (opt.controller == ControllerKind::policy) {
    if (opt.checkpoint.empty())
      throw std::invalid_argument("evaluate: policy controller needs --checkpoint");
    params = load_checkpoint(opt.checkpoint).params;
    policy = &params;
  }

  if (!opt.out_dir.empty()) std::filesystem::create_directories(opt.out_dir);

  EvalResult result;
  std::vector<MetricsReport> reports;
  for (int r = 0; r < opt.runs; ++r) {
    const std::uint64_t seed = mix_seed(opt.base_seed, static_cast<std::uint64_t>(r));
    EpisodeTrace trace = run_episode(opt.config, opt.controller, policy, seed, opt.checkpoint);

    RunResult run;
    run.wall_time_s = trace.wall_time_s;
    if (!opt.out_dir.empty()) {
      run.trace_path = (std::filesystem::path(opt.out_dir) /
                        (to_string(opt.controller) + "_run" + std::to_string(r) + ".jsonl"))
                           .string();
      write_trace(run.trace_path, trace);
    }
    run.metrics = compute_metrics(trace);
    reports.push_back(run.metrics);
    result.runs.push_back(std::move(run));
  }
  result.aggregate = aggregate_metrics(reports);
  return result;
}

ReplayReport replay_trace(const std::string& path) {
  const EpisodeTrace stored = read_trace(path);
  const Config cfg = parse_config_text(header_config_text(stored.header));

  ReplayReport rep;
  rep.fingerprint_ok = config_fingerprint(cfg) == stored.header.fingerprint;
  if (!rep.fingerprint_ok) {
    rep.match.identical = false;
    rep.match.detail = "embedded config does not match the stored fingerprint";
    return rep;
  }

  const ControllerKind kind = controller_from_string(stored.header.controller);
  PolicyParameters params;
  const PolicyParameters* policy = nullptr;
  if (kind == ControllerKind::policy) {
    params = load_checkpoint(stored.header.checkpoint).params;
    policy = &params;
  }

  const EpisodeTrace fresh =
      run_episode(cfg, kind, policy, stored.header.seed, stored.header.checkpoint);
  rep.match = compare_traces(stored, fresh);
  return rep;
}

void write_plot_data(const EpisodeTrace& trace, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const Config cfg = parse_config_text(header_config_text(trace.header));
  const int n = trace.header.agents;
  const int dim = trace.header.dimension;
  const double dt = cfg.phys.dt;

  {
    std::ofstream os(std::filesystem::path(out_dir) / "trajectories.csv", std::ios::trunc);
    if (!os) throw std::runtime_error("plot-data: cannot write trajectories.csv");
    os << "step,time_s,agent";
    os << (dim == 3 ? ",x,y,z,goal_x,goal_y,goal_z" : ",x,y,goal_x,goal_y");
    os << '\n';
    for (const auto& s : trace.steps)
      for (int i = 0; i < n; ++i) {
        os << s.step << ',' << static_cast<double>(s.step) * dt << ',' << i;
        for (int c = 0; c < dim; ++c) os << ',' << s.position[static_cast<std::size_t>(i) * dim + c];
        for (int c = 0; c < dim; ++c) os << ',' << s.goal[static_cast<std::size_t>(i) * dim + c];
        os << '\n';
      }
  }

  if (n > 1) {
    std::ofstream os(std::filesystem::path(out_dir) / "min_distance.csv", std::ios::trunc);
    if (!os) throw std::runtime_error("plot-data: cannot write min_distance.csv");
    os << "step,time_s,min_distance\n";
    for (const auto& s : trace.steps) {
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          double acc = 0.0;
          for (int c = 0; c < dim; ++c) {
            const double d = s.position[static_cast<std::size_t>(i) * dim + c] -
                             s.position[static_cast<std::size_t>(j) * dim + c];
            acc += d * d;
          }
          best = std::min(best, std::sqrt(acc));
        }
      os << s.step << ',' << static_cast<double>(s.step) * dt << ',' << best << '\n';
    }
  }
}

}  // namespace swarm
