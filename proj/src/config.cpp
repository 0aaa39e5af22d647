#include "swarm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace swarm {
namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("config: bad floating-point value '" + s + "'");
  return v;
}

template <class T>
T parse_integer(const std::string& s) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("config: bad integer value '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("config: bad boolean value '" + s + "', want true|false");
}

struct KeyDef {
  std::string key;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&)> set;
};

std::vector<KeyDef> build_registry() {
  std::vector<KeyDef> defs;
  auto dbl = [&](const char* key, auto member) {
    defs.push_back({key, [member](const Config& c) { return format_double(std::invoke(member, c)); },
                    [member](Config& c, const std::string& s) { std::invoke(member, c) = parse_double(s); }});
  };
  auto num = [&](const char* key, auto member) {
    using T = std::decay_t<decltype(std::invoke(member, std::declval<Config&>()))>;
    defs.push_back({key,
                    [member](const Config& c) { return std::to_string(std::invoke(member, c)); },
                    [member](Config& c, const std::string& s) {
                      std::invoke(member, c) = parse_integer<T>(s);
                    }});
  };
  auto bol = [&](const char* key, auto member) {
    defs.push_back({key,
                    [member](const Config& c) {
                      return std::invoke(member, c) ? std::string("true") : std::string("false");
                    },
                    [member](Config& c, const std::string& s) { std::invoke(member, c) = parse_bool(s); }});
  };

  defs.push_back({"scenario.kind", [](const Config& c) { return to_string(c.scenario.kind); },
                  [](Config& c, const std::string& s) { c.scenario.kind = scenario_kind_from_string(s); }});
  num("scenario.dimension", [](auto& c) -> auto& { return c.scenario.dimension; });
  num("scenario.agents", [](auto& c) -> auto& { return c.scenario.agents; });
  dbl("scenario.circle_radius", [](auto& c) -> auto& { return c.scenario.circle_radius; });
  dbl("scenario.capture_radius", [](auto& c) -> auto& { return c.scenario.capture_radius; });
  dbl("scenario.avoid_radius", [](auto& c) -> auto& { return c.scenario.avoid_radius; });
  dbl("scenario.c_p", [](auto& c) -> auto& { return c.scenario.c_p; });
  dbl("scenario.c_c", [](auto& c) -> auto& { return c.scenario.c_c; });
  num("scenario.horizon", [](auto& c) -> auto& { return c.scenario.horizon; });
  num("seed", [](auto& c) -> auto& { return c.scenario.seed; });

  dbl("phys.dt", [](auto& c) -> auto& { return c.phys.dt; });
  dbl("phys.c_v", [](auto& c) -> auto& { return c.phys.c_v; });
  dbl("phys.c_w", [](auto& c) -> auto& { return c.phys.c_w; });
  dbl("phys.v_max", [](auto& c) -> auto& { return c.phys.v_max; });
  dbl("phys.omega_max", [](auto& c) -> auto& { return c.phys.omega_max; });

  dbl("noise.sigma_p", [](auto& c) -> auto& { return c.noise.sigma_p; });
  dbl("noise.sigma_v", [](auto& c) -> auto& { return c.noise.sigma_v; });
  dbl("noise.sigma_d", [](auto& c) -> auto& { return c.noise.sigma_d; });
  dbl("noise.sigma_phi", [](auto& c) -> auto& { return c.noise.sigma_phi; });

  dbl("sensing.range", [](auto& c) -> auto& { return c.sensor_range; });
  num("sensing.k", [](auto& c) -> auto& { return c.k_nearest; });

  dbl("ppo.learning_rate", [](auto& c) -> auto& { return c.ppo.learning_rate; });
  dbl("ppo.kl_coeff", [](auto& c) -> auto& { return c.ppo.kl_coeff; });
  dbl("ppo.clip_param", [](auto& c) -> auto& { return c.ppo.clip_param; });
  num("ppo.train_batch", [](auto& c) -> auto& { return c.ppo.train_batch; });
  num("ppo.minibatch", [](auto& c) -> auto& { return c.ppo.minibatch; });
  num("ppo.sgd_iters", [](auto& c) -> auto& { return c.ppo.sgd_iters; });
  dbl("ppo.gamma", [](auto& c) -> auto& { return c.ppo.gamma; });
  dbl("ppo.gae_lambda", [](auto& c) -> auto& { return c.ppo.gae_lambda; });
  num("ppo.total_steps", [](auto& c) -> auto& { return c.ppo.total_steps; });

  num("train.num_envs", [](auto& c) -> auto& { return c.num_envs; });
  num("train.threads", [](auto& c) -> auto& { return c.rollout_threads; });
  num("train.checkpoint_every", [](auto& c) -> auto& { return c.checkpoint_every; });
  defs.push_back({"train.curriculum", [](const Config& c) { return c.curriculum; },
                  [](Config& c, const std::string& s) { c.curriculum = s; }});
  num("train.curriculum_start", [](auto& c) -> auto& { return c.curriculum_start; });
  num("train.curriculum_end", [](auto& c) -> auto& { return c.curriculum_end; });
  num("train.curriculum_increment", [](auto& c) -> auto& { return c.curriculum_increment; });

  dbl("orca.time_horizon", [](auto& c) -> auto& { return c.orca.time_horizon; });
  dbl("orca.agent_radius", [](auto& c) -> auto& { return c.orca.agent_radius; });
  dbl("orca.max_speed", [](auto& c) -> auto& { return c.orca.max_speed; });
  dbl("orca.time_step", [](auto& c) -> auto& { return c.orca.time_step; });

  dbl("fmp.attraction_gain", [](auto& c) -> auto& { return c.fmp.attraction_gain; });
  dbl("fmp.repulsion_gain", [](auto& c) -> auto& { return c.fmp.repulsion_gain; });
  dbl("fmp.repulsion_range", [](auto& c) -> auto& { return c.fmp.repulsion_range; });
  dbl("fmp.max_speed", [](auto& c) -> auto& { return c.fmp.max_speed; });

  bol("eval.baseline_single_integrator",
      [](auto& c) -> auto& { return c.baseline_single_integrator; });
  dbl("eval.collision_threshold", [](auto& c) -> auto& { return c.collision_threshold; });

  return defs;
}

const std::vector<KeyDef>& registry() {
  static const std::vector<KeyDef> defs = build_registry();
  return defs;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void Config::validate() const {
  scenario.validate();
  phys.validate();
  noise.validate();
  ppo.validate();
  orca.validate();
  fmp.validate();
  if (sensor_range <= 0) throw std::invalid_argument("config: sensing.range must be > 0");
  if (k_nearest < 1) throw std::invalid_argument("config: sensing.k must be >= 1");
  if (num_envs < 1) throw std::invalid_argument("config: train.num_envs must be >= 1");
  if (rollout_threads < 1) throw std::invalid_argument("config: train.threads must be >= 1");
  if (checkpoint_every < 1)
    throw std::invalid_argument("config: train.checkpoint_every must be >= 1");
  if (collision_threshold < 0)
    throw std::invalid_argument("config: eval.collision_threshold must be >= 0");
  derive_curriculum(*this);  // throws on a malformed table
}

Config parse_config_text(const std::string& text) {
  Config cfg;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) + " has no '='");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    const KeyDef* def = nullptr;
    for (const auto& d : registry())
      if (d.key == key) {
        def = &d;
        break;
      }
    if (!def) throw std::invalid_argument("config: unknown key '" + key + "'");
    if (!seen.insert(key).second)
      throw std::invalid_argument("config: duplicate key '" + key + "'");
    def->set(cfg, value);
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

void save_config(const std::string& path, const Config& cfg) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("config: cannot open '" + path + "' for writing");
  os << canonical_text(cfg);
  if (!os) throw std::runtime_error("config: write failed for '" + path + "'");
}

std::string canonical_text(const Config& cfg) {
  std::string out;
  for (const auto& d : registry()) {
    out += d.key;
    out += " = ";
    out += d.get(cfg);
    out += '\n';
  }
  return out;
}

std::uint64_t config_fingerprint(const Config& cfg) {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](const std::string& s) {
    for (const unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& d : registry()) {
    mix(d.key);
    mix("=");
    mix(d.get(cfg));
    mix("\n");
  }
  return h;
}

std::vector<ConfigDiff> diff_configs(const Config& a, const Config& b) {
  std::vector<ConfigDiff> out;
  for (const auto& d : registry()) {
    const std::string va = d.get(a);
    const std::string vb = d.get(b);
    if (va != vb) out.push_back({d.key, va, vb});
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> config_entries(const Config& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& d : registry()) out.emplace_back(d.key, d.get(cfg));
  return out;
}

Conditioning policy_conditioning(const Config& cfg) {
  const int dim = cfg.scenario.dimension;
  const int k = cfg.k_nearest;
  const double pos = cfg.scenario.circle_radius;
  const double vel = cfg.phys.v_max;
  const double ang = std::numbers::pi;
  const double range = cfg.sensor_range;

  Conditioning c;
  c.obs_scale.resize(ObservationVector::width(dim, k));
  int at = 0;
  for (int i = 0; i < dim; ++i) c.obs_scale[at++] = pos;        // own position
  for (int i = 0; i < dim; ++i) c.obs_scale[at++] = vel;        // own velocity
  c.obs_scale[at++] = 2.0 * pos;                                // goal distance
  c.obs_scale[at++] = ang;                                      // goal bearing
  if (dim == 3) c.obs_scale[at++] = 2.0 * pos;                  // goal z offset
  for (int slot = 0; slot < k; ++slot) {
    c.obs_scale[at++] = range;                                  // neighbor distance
    c.obs_scale[at++] = ang;                                    // neighbor bearing
    for (int i = 0; i < dim; ++i) c.obs_scale[at++] = 2.0 * vel;
    if (dim == 3) c.obs_scale[at++] = range;
  }

  c.action_scale.resize(dim + 1);
  for (int i = 0; i < dim; ++i) c.action_scale[i] = cfg.phys.v_max;
  c.action_scale[dim] = cfg.phys.omega_max;

  // Rough magnitude of the discounted progress return from the far side of
  // the arena; keeps the value head near unit scale.
  c.value_scale =
      cfg.scenario.c_p * cfg.phys.v_max * 2.0 * cfg.scenario.circle_radius / (1.0 - cfg.ppo.gamma);
  return c;
}

CurriculumSchedule derive_curriculum(const Config& cfg) {
  CurriculumSchedule s;
  if (cfg.curriculum == "off") {
    s.entries.push_back({0, cfg.scenario.agents});
    return s;
  }
  if (cfg.curriculum == "auto") {
    if (cfg.curriculum_increment <= 0 || cfg.curriculum_end < cfg.curriculum_start ||
        cfg.curriculum_start < 1)
      throw std::invalid_argument("config: bad auto-curriculum bounds");
    const int stages =
        (cfg.curriculum_end - cfg.curriculum_start) / cfg.curriculum_increment + 1;
    const long slice = cfg.ppo.total_steps / stages;
    if (slice < 1) throw std::invalid_argument("config: total_steps too small for the curriculum");
    for (int i = 0; i < stages; ++i)
      s.entries.push_back({static_cast<long>(i) * slice,
                           cfg.curriculum_start + i * cfg.curriculum_increment});
    s.validate();
    return s;
  }

  // Explicit "step:count,step:count" table.
  std::istringstream is(cfg.curriculum);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("config: curriculum entry '" + item + "' lacks ':'");
    s.entries.push_back({parse_integer<long>(trim(item.substr(0, colon))),
                         parse_integer<int>(trim(item.substr(colon + 1)))});
  }
  if (s.entries.empty() || s.entries.front().step_threshold != 0)
    throw std::invalid_argument("config: curriculum table must start at step 0");
  s.validate();
  return s;
}

}  // namespace swarm
