#include "swarm/trace.hpp"

#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "swarm/config.hpp"

namespace swarm {
namespace {

using nlohmann::json;

std::string fingerprint_hex(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_fingerprint(const std::string& s) {
  if (s.size() != 18 || s.rfind("0x", 0) != 0)
    throw std::runtime_error("trace: malformed fingerprint '" + s + "'");
  return std::stoull(s.substr(2), nullptr, 16);
}

json header_json(const TraceHeader& h) {
  json cfg = json::object();
  for (const auto& [k, v] : h.config) cfg[k] = v;
  return json{{"schema", h.schema},
              {"config", cfg},
              {"fingerprint", fingerprint_hex(h.fingerprint)},
              {"seed", h.seed},
              {"controller", h.controller},
              {"checkpoint", h.checkpoint},
              {"dimension", h.dimension},
              {"agents", h.agents}};
}

json step_json(const TraceStep& s) {
  return json{{"step", s.step},     {"p", s.position}, {"v", s.velocity},
              {"yaw", s.yaw},       {"a", s.action},   {"r", s.reward},
              {"g", s.goal},        {"collect", s.collected},
              {"reach", s.reached}};
}

TraceStep parse_step(const json& j) {
  TraceStep s;
  s.step = j.at("step").get<long>();
  s.position = j.at("p").get<std::vector<double>>();
  s.velocity = j.at("v").get<std::vector<double>>();
  s.yaw = j.at("yaw").get<std::vector<double>>();
  s.action = j.at("a").get<std::vector<double>>();
  s.reward = j.at("r").get<std::vector<double>>();
  s.goal = j.at("g").get<std::vector<double>>();
  s.collected = j.at("collect").get<std::vector<int>>();
  s.reached = j.at("reach").get<std::vector<int>>();
  return s;
}

}  // namespace

TraceWriter::TraceWriter(const std::string& path, const TraceHeader& header)
    : os_(path, std::ios::trunc) {
  if (!os_) throw std::runtime_error("trace: cannot open '" + path + "' for writing");
  os_ << header_json(header).dump() << '\n';
}

void TraceWriter::append(const TraceStep& step) {
  os_ << step_json(step).dump() << '\n';
  ++steps_;
}

void TraceWriter::finish(double wall_time_s) {
  if (finished_) return;
  os_ << json{{"schema", "swarm-trace-footer/1"}, {"steps", steps_}, {"wall_time_s", wall_time_s}}
             .dump()
      << '\n';
  os_.flush();
  if (!os_) throw std::runtime_error("trace: write failed");
  finished_ = true;
}

TraceWriter::~TraceWriter() {
  if (!finished_) finish(0.0);
}

EpisodeTrace read_trace(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("trace: cannot open '" + path + "'");

  EpisodeTrace trace;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("trace: empty file '" + path + "'");
  const json h = json::parse(line);
  if (h.at("schema").get<std::string>() != "swarm-trace/1")
    throw std::runtime_error("trace: unsupported schema in '" + path + "'");

  trace.header.schema = h.at("schema").get<std::string>();
  // Keys come back alphabetized from the JSON object; a round trip through
  // the config parser restores canonical order and validates the embedding.
  for (const auto& [k, v] : h.at("config").items())
    trace.header.config.emplace_back(k, v.get<std::string>());
  trace.header.config = config_entries(parse_config_text(header_config_text(trace.header)));
  trace.header.fingerprint = parse_fingerprint(h.at("fingerprint").get<std::string>());
  trace.header.seed = h.at("seed").get<std::uint64_t>();
  trace.header.controller = h.at("controller").get<std::string>();
  trace.header.checkpoint = h.value("checkpoint", std::string());
  trace.header.dimension = h.at("dimension").get<int>();
  trace.header.agents = h.at("agents").get<int>();

  bool footer_seen = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.contains("schema")) {
      if (j.at("schema").get<std::string>() == "swarm-trace-footer/1") {
        trace.wall_time_s = j.at("wall_time_s").get<double>();
        if (j.at("steps").get<long>() != static_cast<long>(trace.steps.size()))
          throw std::runtime_error("trace: footer step count mismatch in '" + path + "'");
        footer_seen = true;
        break;
      }
      throw std::runtime_error("trace: unexpected schema line in '" + path + "'");
    }
    trace.steps.push_back(parse_step(j));
  }
  if (!footer_seen) throw std::runtime_error("trace: missing footer, truncated file '" + path + "'");
  return trace;
}

void write_trace(const std::string& path, const EpisodeTrace& trace) {
  TraceWriter w(path, trace.header);
  for (const auto& s : trace.steps) w.append(s);
  w.finish(trace.wall_time_s);
}

TraceMatch compare_traces(const EpisodeTrace& a, const EpisodeTrace& b) {
  TraceMatch m;
  auto fail = [&m](const std::string& detail) {
    m.identical = false;
    m.detail = detail;
    return m;
  };

  if (a.steps.size() != b.steps.size())
    return fail("step count " + std::to_string(a.steps.size()) + " vs " +
                std::to_string(b.steps.size()));

  auto cmp_vec = [](const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] != y[i]) return false;
    return true;
  };

  for (std::size_t t = 0; t < a.steps.size(); ++t) {
    const TraceStep& s = a.steps[t];
    const TraceStep& o = b.steps[t];
    const std::string at = "step " + std::to_string(s.step);
    if (s.step != o.step) return fail(at + ": step index");
    if (!cmp_vec(s.position, o.position)) return fail(at + ": position");
    if (!cmp_vec(s.velocity, o.velocity)) return fail(at + ": velocity");
    if (!cmp_vec(s.yaw, o.yaw)) return fail(at + ": yaw");
    if (!cmp_vec(s.action, o.action)) return fail(at + ": action");
    if (!cmp_vec(s.reward, o.reward)) return fail(at + ": reward");
    if (!cmp_vec(s.goal, o.goal)) return fail(at + ": goal");
    if (s.collected != o.collected) return fail(at + ": collected events");
    if (s.reached != o.reached) return fail(at + ": reached events");
  }
  return m;
}

std::string header_config_text(const TraceHeader& header) {
  std::string text;
  for (const auto& [k, v] : header.config) {
    text += k;
    text += " = ";
    text += v;
    text += '\n';
  }
  return text;
}

}  // namespace swarm
