#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace swarm {

// Self-describing episode record. The header embeds the full config in its
// canonical key order plus the fingerprint, so a trace can be replayed and
// cross-checked without the original config file.
struct TraceHeader {
  std::string schema = "swarm-trace/1";
  std::vector<std::pair<std::string, std::string>> config;  // canonical entries
  std::uint64_t fingerprint = 0;
  std::uint64_t seed = 0;
  std::string controller;       // policy | orca | fmp | straight
  std::string checkpoint;       // path, policy controller only
  int dimension = 2;
  int agents = 0;
};

// One transition: the pre-step state, the command applied to it, the reward
// it earned, and the events the transition produced. Flat arrays are in
// agent-major order (agent 0 first, Dim entries per agent where applicable).
struct TraceStep {
  long step = 0;
  std::vector<double> position;  // N*Dim
  std::vector<double> velocity;  // N*Dim
  std::vector<double> yaw;       // N
  std::vector<double> action;    // N*(Dim+1), physical commands
  std::vector<double> reward;    // N
  std::vector<double> goal;      // N*Dim, goals in effect at this step
  std::vector<int> collected;    // package pickups during the transition
  std::vector<int> reached;      // agents inside the capture radius pre-step
};

struct EpisodeTrace {
  TraceHeader header;
  std::vector<TraceStep> steps;
  double wall_time_s = 0.0;
};

// Streaming JSONL writer: header line, one line per step, footer line.
class TraceWriter {
 public:
  TraceWriter(const std::string& path, const TraceHeader& header);
  void append(const TraceStep& step);
  void finish(double wall_time_s);
  ~TraceWriter();

 private:
  std::ofstream os_;
  bool finished_ = false;
  long steps_ = 0;
};

EpisodeTrace read_trace(const std::string& path);
void write_trace(const std::string& path, const EpisodeTrace& trace);

// Bitwise step-data comparison; on mismatch names the first diverging field.
struct TraceMatch {
  bool identical = true;
  std::string detail;
};
TraceMatch compare_traces(const EpisodeTrace& a, const EpisodeTrace& b);

// Reassembles the canonical config text from a trace header.
std::string header_config_text(const TraceHeader& header);

}  // namespace swarm
