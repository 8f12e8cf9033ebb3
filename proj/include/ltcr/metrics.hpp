#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace ltcr {

struct AgentMetricsRow {
  long frame = 0;
  double eval_return = 0.0;
  double c51_loss = 0.0;
  double distill_loss = 0.0;
  double epsilon = 0.0;
};

struct TeamKlRow {
  long frame = 0;
  std::vector<double> pair_kl;  // pairs (i, j), i < j, lexicographic

  double mean() const;
};

struct TraceRow {
  long frame = 0;
  int action = 0;
  double reward = 0.0;
  bool terminal = false;
  std::vector<double> observation;
};

/// Receives metric rows as a run produces them.
class MetricsSink {
 public:
  virtual ~MetricsSink() = default;
  virtual void agent_row(int agent, const AgentMetricsRow& row) = 0;
  virtual void team_row(const TeamKlRow& row) = 0;
  /// Optional per-step episode trace; default drops it.
  virtual void trace_row(int /*agent*/, const TraceRow& /*row*/) {}
  virtual bool wants_traces() const { return false; }
};

/// Keeps everything in memory; used by tests and the acceptance suite.
class MemoryMetricsSink final : public MetricsSink {
 public:
  explicit MemoryMetricsSink(int team_size) : agents_(team_size) {}
  void agent_row(int agent, const AgentMetricsRow& row) override {
    agents_[agent].push_back(row);
  }
  void team_row(const TeamKlRow& row) override { team_.push_back(row); }

  const std::vector<AgentMetricsRow>& agent(int i) const { return agents_[i]; }
  const std::vector<TeamKlRow>& team() const { return team_; }

 private:
  std::vector<std::vector<AgentMetricsRow>> agents_;
  std::vector<TeamKlRow> team_;
};

/// One delimited text file per agent plus one for the team KL series, with
/// header rows. Every row is flushed as it is written so a killed run still
/// leaves parseable files. Doubles are printed with 17 significant digits
/// (exact round-trip), which also makes determinism checks a byte
/// comparison.
class FileMetricsSink final : public MetricsSink {
 public:
  FileMetricsSink(const std::string& dir, int team_size,
                  bool trace_episodes = false);
  ~FileMetricsSink() override;

  FileMetricsSink(const FileMetricsSink&) = delete;
  FileMetricsSink& operator=(const FileMetricsSink&) = delete;

  void agent_row(int agent, const AgentMetricsRow& row) override;
  void team_row(const TeamKlRow& row) override;
  void trace_row(int agent, const TraceRow& row) override;
  bool wants_traces() const override { return !trace_files_.empty(); }

  static std::string agent_file(const std::string& dir, int agent);
  static std::string team_file(const std::string& dir);
  static std::string trace_file(const std::string& dir, int agent);

 private:
  std::vector<std::FILE*> agent_files_;
  std::vector<std::FILE*> trace_files_;
  std::FILE* team_file_ = nullptr;
};

/// Formats a double with enough digits to round-trip exactly.
std::string format_double(double v);

/// Trailing moving average; the window shrinks at the head of the series.
std::vector<double> moving_average(const std::vector<double>& series, int window);

/// First frame at which the series reaches `threshold`, or -1 if it never
/// does.
long frames_to_threshold(const std::vector<long>& frames,
                         const std::vector<double>& values, double threshold);

struct LoadedAgentSeries {
  std::vector<AgentMetricsRow> rows;
  std::size_t skipped_rows = 0;
};

struct LoadedTeamSeries {
  std::vector<TeamKlRow> rows;
  std::size_t skipped_rows = 0;
};

LoadedAgentSeries load_agent_metrics(const std::string& path);
LoadedTeamSeries load_team_metrics(const std::string& path);

}  // namespace ltcr
