#include "ltcr/metrics.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ltcr/errors.hpp"

namespace ltcr {

double TeamKlRow::mean() const {
  if (pair_kl.empty()) return 0.0;
  double sum = 0.0;
  for (double v : pair_kl) sum += v;
  return sum / static_cast<double>(pair_kl.size());
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

FileMetricsSink::FileMetricsSink(const std::string& dir, int team_size,
                                 bool trace_episodes) {
  std::filesystem::create_directories(dir);
  agent_files_.resize(team_size, nullptr);
  for (int i = 0; i < team_size; ++i) {
    const std::string path = agent_file(dir, i);
    agent_files_[i] = std::fopen(path.c_str(), "w");
    if (!agent_files_[i]) throw RunError("cannot open metrics file: " + path);
    std::fputs("frame,eval_return,c51_loss,distill_loss,epsilon\n",
               agent_files_[i]);
    std::fflush(agent_files_[i]);
  }
  if (trace_episodes) {
    trace_files_.resize(team_size, nullptr);
    for (int i = 0; i < team_size; ++i) {
      const std::string path = trace_file(dir, i);
      trace_files_[i] = std::fopen(path.c_str(), "w");
      if (!trace_files_[i]) throw RunError("cannot open trace file: " + path);
    }
  }
  const std::string path = team_file(dir);
  team_file_ = std::fopen(path.c_str(), "w");
  if (!team_file_) throw RunError("cannot open metrics file: " + path);
  std::fputs("frame,kl_mean", team_file_);
  for (int i = 0; i < team_size; ++i)
    for (int j = i + 1; j < team_size; ++j)
      std::fprintf(team_file_, ",kl_%d_%d", i, j);
  std::fputs("\n", team_file_);
  std::fflush(team_file_);
}

FileMetricsSink::~FileMetricsSink() {
  for (std::FILE* f : agent_files_)
    if (f) std::fclose(f);
  for (std::FILE* f : trace_files_)
    if (f) std::fclose(f);
  if (team_file_) std::fclose(team_file_);
}

void FileMetricsSink::trace_row(int agent, const TraceRow& row) {
  std::FILE* f = trace_files_.at(agent);
  std::fprintf(f, "%ld %d %s %d", row.frame, row.action,
               format_double(row.reward).c_str(), row.terminal ? 1 : 0);
  for (double v : row.observation)
    std::fprintf(f, " %s", format_double(v).c_str());
  std::fputs("\n", f);
}

void FileMetricsSink::agent_row(int agent, const AgentMetricsRow& row) {
  std::FILE* f = agent_files_.at(agent);
  std::fprintf(f, "%ld,%s,%s,%s,%s\n", row.frame,
               format_double(row.eval_return).c_str(),
               format_double(row.c51_loss).c_str(),
               format_double(row.distill_loss).c_str(),
               format_double(row.epsilon).c_str());
  std::fflush(f);
}

void FileMetricsSink::team_row(const TeamKlRow& row) {
  std::fprintf(team_file_, "%ld,%s", row.frame, format_double(row.mean()).c_str());
  for (double v : row.pair_kl)
    std::fprintf(team_file_, ",%s", format_double(v).c_str());
  std::fputs("\n", team_file_);
  std::fflush(team_file_);
}

std::string FileMetricsSink::agent_file(const std::string& dir, int agent) {
  return dir + "/metrics_agent" + std::to_string(agent) + ".csv";
}

std::string FileMetricsSink::team_file(const std::string& dir) {
  return dir + "/team_metrics.csv";
}

std::string FileMetricsSink::trace_file(const std::string& dir, int agent) {
  return dir + "/trace_agent" + std::to_string(agent) + ".txt";
}

std::vector<double> moving_average(const std::vector<double>& series, int window) {
  require(window >= 1, "moving_average: window must be >= 1");
  std::vector<double> out(series.size());
  double running = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    running += series[i];
    if (i >= static_cast<std::size_t>(window)) running -= series[i - window];
    const std::size_t n = std::min<std::size_t>(i + 1, window);
    out[i] = running / static_cast<double>(n);
  }
  return out;
}

long frames_to_threshold(const std::vector<long>& frames,
                         const std::vector<double>& values, double threshold) {
  require(frames.size() == values.size(), "frames_to_threshold: length mismatch");
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] >= threshold) return frames[i];
  return -1;
}

namespace {

// Splits a CSV line; returns false (skip the row) on any malformed field.
bool parse_fields(const std::string& line, std::vector<double>& out) {
  out.clear();
  const char* p = line.c_str();
  while (*p) {
    char* end = nullptr;
    const double v = std::strtod(p, &end);
    if (end == p) return false;
    out.push_back(v);
    p = end;
    if (*p == ',') {
      ++p;
    } else if (*p != '\0') {
      return false;
    }
  }
  return !out.empty();
}

}  // namespace

LoadedAgentSeries load_agent_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RunError("cannot open metrics file: " + path);
  LoadedAgentSeries result;
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> fields;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!parse_fields(line, fields) || fields.size() != 5) {
      ++result.skipped_rows;
      continue;
    }
    AgentMetricsRow row;
    row.frame = static_cast<long>(fields[0]);
    row.eval_return = fields[1];
    row.c51_loss = fields[2];
    row.distill_loss = fields[3];
    row.epsilon = fields[4];
    result.rows.push_back(row);
  }
  return result;
}

LoadedTeamSeries load_team_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RunError("cannot open metrics file: " + path);
  LoadedTeamSeries result;
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> fields;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!parse_fields(line, fields) || fields.size() < 2) {
      ++result.skipped_rows;
      continue;
    }
    TeamKlRow row;
    row.frame = static_cast<long>(fields[0]);
    row.pair_kl.assign(fields.begin() + 2, fields.end());
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace ltcr
