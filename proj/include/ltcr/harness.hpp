#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ltcr/config.hpp"
#include "ltcr/metrics.hpp"

namespace ltcr {

inline constexpr const char* kVersion = "0.1.0";

/// Runs every seed of the experiment, writing
///   <output_dir>/seed_<s>/metrics_agent<i>.csv
///   <output_dir>/seed_<s>/team_metrics.csv
///   <output_dir>/seed_<s>/checkpoint_agent<i>.net
///   <output_dir>/manifest.json
/// Seeds run in parallel worker tasks; each worker owns its environment,
/// agents and metrics files. Metrics bytes are a pure function of
/// (config, seed); wall-clock timings go to the manifest only.
/// Returns the resolved output directory.
std::string run_experiment(const ExperimentConfig& config);

/// Everything summarize/report need from one finished condition directory.
struct LoadedRun {
  std::string dir;
  std::string condition;  // schedule name from the manifest
  long total_frames = 0;
  long eval_interval = 1;
  long smoothing_window_frames = 1;
  double threshold = 0.0;
  // [seed][agent] evaluation series
  std::vector<std::vector<LoadedAgentSeries>> seeds;
  std::vector<LoadedTeamSeries> team_series;
  std::vector<std::string> seed_names;
  std::size_t skipped_rows = 0;
};

LoadedRun load_run(const std::string& dir);

struct ConditionSummary {
  std::string condition;
  std::string dir;
  int seeds = 0;
  double average_score = 0.0;  // mean smoothed evaluation return
  double highest_score = 0.0;  // max smoothed evaluation return
  std::optional<double> gain_average_pct;  // vs the "baseline" condition
  std::optional<double> gain_highest_pct;
  long median_frames_to_threshold = -1;  // pooled over (seed, agent); -1 = never
};

std::vector<ConditionSummary> summarize_runs(const std::vector<LoadedRun>& runs);

/// Plain-text table of summarize_runs output.
std::string format_summary(const std::vector<ConditionSummary>& rows,
                           bool baseline_present);

/// Writes SVG learning curves, the teammate-KL curve, a cross-condition
/// comparison figure and summary.txt into <out_dir>.
void render_report(const std::vector<LoadedRun>& runs, const std::string& out_dir);

// Series helpers shared by summarize/report/acceptance.
std::vector<double> eval_returns(const LoadedAgentSeries& s);
std::vector<long> eval_frames(const LoadedAgentSeries& s);
int window_points(long smoothing_window_frames, long eval_interval);

}  // namespace ltcr
