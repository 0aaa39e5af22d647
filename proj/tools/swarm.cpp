#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "swarm/eval.hpp"
#include "swarm/trainer.hpp"

namespace {

void print_aggregate(const std::string& name, const swarm::AggregateMetrics& a) {
  std::printf("%-9s runs=%d extra_time=%.2fs deadlock=%s min_dist=%s collisions=%d "
              "extra_dist=%.1fm ratio=%.3f packages=%.2f\n",
              name.c_str(), a.runs, a.extra_time_s, a.any_deadlock ? "yes" : "no",
              a.min_distance_defined ? (std::to_string(a.min_distance).substr(0, 6) + "m").c_str()
                                     : "n/a",
              a.collisions_total, a.extra_distance_m, a.travel_ratio, a.packages_per_agent);
}

swarm::EvalResult run_eval(const swarm::Config& cfg, swarm::ControllerKind kind,
                           const std::string& checkpoint, int runs, std::uint64_t seed,
                           const std::string& out_dir) {
  swarm::EvalOptions opt;
  opt.config = cfg;
  opt.controller = kind;
  opt.checkpoint = checkpoint;
  opt.runs = runs;
  opt.base_seed = seed;
  opt.out_dir = out_dir;
  return swarm::evaluate(opt);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized swarm collision-avoidance workbench"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint, trace_path, controllers = "policy,orca,fmp";
  std::string controller = "straight";
  std::string resume;
  int runs = 5;
  int agents_override = 0;
  std::uint64_t seed = 0;
  bool seed_set = false, quiet = false;
  long total_steps_override = 0;

  auto add_config_opt = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (key = value lines)")->required();
  };

  CLI::App* train = app.add_subcommand("train", "train a policy");
  add_config_opt(train);
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
    seed_set = true;
  });
  train->add_option("--resume", resume, "checkpoint to resume from");
  train->add_option("--total-steps", total_steps_override, "override ppo.total_steps");
  long max_iterations = 0;
  train->add_option("--max-iters", max_iterations,
                    "stop this invocation after N iterations (resume later)");
  train->add_flag("--quiet", quiet, "suppress per-iteration output");

  CLI::App* evaluate = app.add_subcommand("evaluate", "run episodes under one controller");
  add_config_opt(evaluate);
  evaluate->add_option("--controller", controller, "policy|orca|fmp|straight");
  evaluate->add_option("--checkpoint", checkpoint, "policy checkpoint");
  evaluate->add_option("--runs", runs, "number of runs");
  evaluate->add_option("--seed", seed, "base seed")->each([&](const std::string&) {
    seed_set = true;
  });
  evaluate->add_option("--out", out_dir, "write traces here");
  evaluate->add_option("--agents", agents_override, "override scenario.agents");

  CLI::App* compare = app.add_subcommand("compare", "run several controllers on the same seeds");
  add_config_opt(compare);
  compare->add_option("--controllers", controllers, "comma-separated controller list");
  compare->add_option("--checkpoint", checkpoint, "policy checkpoint");
  compare->add_option("--runs", runs, "number of runs per controller");
  compare->add_option("--seed", seed, "base seed")->each([&](const std::string&) {
    seed_set = true;
  });
  compare->add_option("--out", out_dir, "write traces here");
  compare->add_option("--agents", agents_override, "override scenario.agents");

  CLI::App* replay = app.add_subcommand("replay", "re-simulate a trace and verify it");
  replay->add_option("--trace", trace_path, "trace file")->required();
  replay->add_option("--config", config_path, "cross-check against this config");

  CLI::App* plot = app.add_subcommand("plot-data", "emit CSV plot data from a trace");
  plot->add_option("--trace", trace_path, "trace file")->required();
  plot->add_option("--out", out_dir, "output directory")->required();

  CLI::App* init = app.add_subcommand("init-config", "write a config with all defaults");
  init->add_option("--out", config_path, "output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (init->parsed()) {
      swarm::save_config(config_path, swarm::Config{});
      std::printf("wrote %s\n", config_path.c_str());
      return 0;
    }

    if (train->parsed()) {
      swarm::TrainOptions opt;
      opt.config = swarm::load_config(config_path);
      if (seed_set) opt.config.scenario.seed = seed;
      if (total_steps_override > 0) opt.config.ppo.total_steps = total_steps_override;
      opt.out_dir = out_dir;
      opt.resume_from = resume;
      opt.max_iterations = max_iterations;
      opt.quiet = quiet;
      const swarm::TrainResult res = swarm::train(opt);
      std::printf("done: %ld steps, checkpoint %s\n", res.steps_done,
                  res.final_checkpoint.c_str());
      return 0;
    }

    if (evaluate->parsed()) {
      swarm::Config cfg = swarm::load_config(config_path);
      if (agents_override > 0) cfg.scenario.agents = agents_override;
      const auto kind = swarm::controller_from_string(controller);
      const auto res =
          run_eval(cfg, kind, checkpoint, runs, seed_set ? seed : cfg.scenario.seed, out_dir);
      for (std::size_t r = 0; r < res.runs.size(); ++r) {
        const auto& m = res.runs[r].metrics;
        std::printf("run %zu: extra_time=%.2fs%s min_dist=%.3fm collisions=%d packages=%.2f\n", r,
                    m.extra_time_s, m.deadlock ? " DEADLOCK" : "",
                    m.min_distance_defined ? m.min_distance : 0.0, m.collisions,
                    m.packages_per_agent);
      }
      print_aggregate(controller, res.aggregate);
      return 0;
    }

    if (compare->parsed()) {
      swarm::Config cfg = swarm::load_config(config_path);
      if (agents_override > 0) cfg.scenario.agents = agents_override;
      std::vector<std::string> names;
      std::string item;
      std::istringstream is(controllers);
      while (std::getline(is, item, ',')) names.push_back(item);
      for (const auto& name : names) {
        const auto kind = swarm::controller_from_string(name);
        const auto res = run_eval(cfg, kind, checkpoint, runs,
                                  seed_set ? seed : cfg.scenario.seed,
                                  out_dir.empty() ? "" : out_dir + "/" + name);
        print_aggregate(name, res.aggregate);
      }
      return 0;
    }

    if (replay->parsed()) {
      if (!config_path.empty()) {
        const swarm::EpisodeTrace t = swarm::read_trace(trace_path);
        const swarm::Config embedded =
            swarm::parse_config_text(swarm::header_config_text(t.header));
        const swarm::Config given = swarm::load_config(config_path);
        bool refuse = false;
        for (const auto& d : swarm::diff_configs(embedded, given)) {
          std::printf("config diff: %s = %s (trace) vs %s (file)\n", d.key.c_str(),
                      d.left.c_str(), d.right.c_str());
          if (d.key != "seed") refuse = true;
        }
        if (refuse) {
          std::printf("refusing replay: trace was recorded under a different config\n");
          return 2;
        }
      }
      const swarm::ReplayReport rep = swarm::replay_trace(trace_path);
      if (!rep.fingerprint_ok) {
        std::printf("refusing replay: %s\n", rep.match.detail.c_str());
        return 2;
      }
      if (rep.match.identical) {
        std::printf("replay identical\n");
        return 0;
      }
      std::printf("replay DIVERGED: %s\n", rep.match.detail.c_str());
      return 1;
    }

    if (plot->parsed()) {
      swarm::write_plot_data(swarm::read_trace(trace_path), out_dir);
      std::printf("wrote %s/trajectories.csv\n", out_dir.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
