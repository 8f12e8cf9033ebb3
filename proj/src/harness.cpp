#include "ltcr/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "ltcr/errors.hpp"
#include "ltcr/network.hpp"
#include "ltcr/svg_plot.hpp"
#include "ltcr/trainer.hpp"

namespace ltcr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_manifest(const std::string& dir, const json& manifest) {
  std::ofstream out(dir + "/manifest.json");
  if (!out) throw RunError("cannot write manifest in " + dir);
  out << manifest.dump(2) << "\n";
}

void run_one_seed(const ExperimentConfig& config, std::uint64_t seed,
                  const std::string& seed_dir, json& seed_info) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(seed_dir);
  FileMetricsSink sink(seed_dir, config.team_size, config.trace_episodes);

  std::vector<AgentConfig> agent_configs(config.team_size, config.agent);
  TeamTrainer trainer(agent_configs, config.protocol, make_team_env(config),
                      seed, &sink);
  trainer.run(config.total_frames);

  for (int i = 0; i < config.team_size; ++i)
    save_network_file(trainer.agent(i).net(),
                      seed_dir + "/checkpoint_agent" + std::to_string(i) + ".net");

  std::size_t uploads = 0;
  for (const RoundReport& r : trainer.round_reports())
    uploads += r.features_added;
  const auto t1 = std::chrono::steady_clock::now();
  seed_info["seed"] = seed;
  seed_info["rounds"] = trainer.round_reports().size();
  seed_info["features_uploaded"] = uploads;
  seed_info["shared_memory_evictions"] = trainer.shared().evictions();
  seed_info["wall_seconds"] =
      std::chrono::duration<double>(t1 - t0).count();
  seed_info["status"] = "complete";
}

}  // namespace

std::string run_experiment(const ExperimentConfig& config) {
  std::string out_dir = config.output_dir;
  if (const char* override_dir = std::getenv("LTCR_OUT_DIR");
      override_dir && *override_dir)
    out_dir = std::string(override_dir) + "/" +
              fs::path(config.output_dir).filename().string();
  fs::create_directories(out_dir);

  json manifest;
  manifest["version"] = kVersion;
  manifest["status"] = "running";
  manifest["config"] = config_to_json(config);
  write_manifest(out_dir, manifest);

  const int n_seeds = static_cast<int>(config.seeds.size());
  std::vector<json> seed_infos(n_seeds);
  std::vector<std::string> errors(n_seeds);

  const int workers = std::min(n_seeds, omp_get_max_threads());
#pragma omp parallel for num_threads(workers) schedule(dynamic)
  for (int s = 0; s < n_seeds; ++s) {
    const std::uint64_t seed = config.seeds[s];
    const std::string seed_dir = out_dir + "/seed_" + std::to_string(seed);
    try {
      run_one_seed(config, seed, seed_dir, seed_infos[s]);
    } catch (const std::exception& e) {
      errors[s] = e.what();
      seed_infos[s]["seed"] = seed;
      seed_infos[s]["status"] = "failed";
      seed_infos[s]["error"] = e.what();
    }
  }

  bool failed = false;
  manifest["seeds"] = json::array();
  for (int s = 0; s < n_seeds; ++s) {
    manifest["seeds"].push_back(seed_infos[s]);
    if (!errors[s].empty()) failed = true;
  }
  manifest["status"] = failed ? "incomplete" : "complete";
  write_manifest(out_dir, manifest);

  if (failed) {
    std::string message = "run incomplete:";
    for (int s = 0; s < n_seeds; ++s)
      if (!errors[s].empty())
        message += " [seed " + std::to_string(config.seeds[s]) + "] " + errors[s];
    throw RunError(message);
  }
  return out_dir;
}

LoadedRun load_run(const std::string& dir) {
  LoadedRun run;
  run.dir = dir;

  std::ifstream in(dir + "/manifest.json");
  if (!in) throw RunError("no manifest.json in " + dir);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw RunError("bad manifest in " + dir + ": " + e.what());
  }
  const json& cfg = manifest.at("config");
  run.condition = cfg.at("schedule").at("preset").get<std::string>();
  run.total_frames = cfg.at("total_frames").get<long>();
  run.eval_interval = cfg.at("evaluation").at("interval").get<long>();
  run.smoothing_window_frames =
      cfg.at("evaluation").at("smoothing_window_frames").get<long>();
  run.threshold = cfg.at("evaluation").at("threshold").get<double>();
  const int team_size = cfg.at("team_size").get<int>();

  std::vector<fs::path> seed_dirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory() &&
        entry.path().filename().string().starts_with("seed_"))
      seed_dirs.push_back(entry.path());
  std::sort(seed_dirs.begin(), seed_dirs.end());

  for (const fs::path& sd : seed_dirs) {
    std::vector<LoadedAgentSeries> agents;
    for (int i = 0; i < team_size; ++i) {
      agents.push_back(
          load_agent_metrics(FileMetricsSink::agent_file(sd.string(), i)));
      run.skipped_rows += agents.back().skipped_rows;
    }
    run.seeds.push_back(std::move(agents));
    run.team_series.push_back(
        load_team_metrics(FileMetricsSink::team_file(sd.string())));
    run.skipped_rows += run.team_series.back().skipped_rows;
    run.seed_names.push_back(sd.filename().string());
  }
  return run;
}

std::vector<double> eval_returns(const LoadedAgentSeries& s) {
  std::vector<double> out;
  out.reserve(s.rows.size());
  for (const AgentMetricsRow& r : s.rows) out.push_back(r.eval_return);
  return out;
}

std::vector<long> eval_frames(const LoadedAgentSeries& s) {
  std::vector<long> out;
  out.reserve(s.rows.size());
  for (const AgentMetricsRow& r : s.rows) out.push_back(r.frame);
  return out;
}

int window_points(long smoothing_window_frames, long eval_interval) {
  if (eval_interval <= 0) return 1;
  return std::max<long>(1, smoothing_window_frames / eval_interval);
}

std::vector<ConditionSummary> summarize_runs(const std::vector<LoadedRun>& runs) {
  std::vector<ConditionSummary> rows;
  for (const LoadedRun& run : runs) {
    ConditionSummary row;
    row.condition = run.condition;
    row.dir = run.dir;
    row.seeds = static_cast<int>(run.seeds.size());
    const int window = window_points(run.smoothing_window_frames, run.eval_interval);

    double mean_sum = 0.0;
    int mean_count = 0;
    double highest = 0.0;
    bool have_any = false;
    std::vector<long> reach;
    for (const auto& agents : run.seeds) {
      for (const LoadedAgentSeries& agent : agents) {
        if (agent.rows.empty()) continue;
        const std::vector<double> smooth = moving_average(eval_returns(agent), window);
        double s = 0.0;
        for (double v : smooth) s += v;
        mean_sum += s / static_cast<double>(smooth.size());
        ++mean_count;
        const double mx = *std::max_element(smooth.begin(), smooth.end());
        highest = have_any ? std::max(highest, mx) : mx;
        have_any = true;
        reach.push_back(frames_to_threshold(eval_frames(agent), smooth, run.threshold));
      }
    }
    if (mean_count > 0) row.average_score = mean_sum / mean_count;
    if (have_any) row.highest_score = highest;

    // Median frames-to-threshold, "never" sorting last.
    if (!reach.empty()) {
      for (long& v : reach)
        if (v < 0) v = std::numeric_limits<long>::max();
      std::sort(reach.begin(), reach.end());
      const long median = reach[reach.size() / 2];
      row.median_frames_to_threshold =
          median == std::numeric_limits<long>::max() ? -1 : median;
    }
    rows.push_back(row);
  }

  // Gains against the (first) baseline condition, if present.
  const ConditionSummary* baseline = nullptr;
  for (const ConditionSummary& r : rows)
    if (r.condition == "baseline") {
      baseline = &r;
      break;
    }
  if (baseline) {
    for (ConditionSummary& r : rows) {
      if (&r == baseline) continue;
      if (baseline->average_score != 0.0)
        r.gain_average_pct =
            (r.average_score - baseline->average_score) / baseline->average_score * 100.0;
      if (baseline->highest_score != 0.0)
        r.gain_highest_pct =
            (r.highest_score - baseline->highest_score) / baseline->highest_score * 100.0;
    }
  }
  return rows;
}

std::string format_summary(const std::vector<ConditionSummary>& rows,
                           bool baseline_present) {
  std::ostringstream out;
  out << "condition      seeds  avg_score    highest    gain_avg  gain_high  frames_to_threshold\n";
  for (const ConditionSummary& r : rows) {
    char line[256];
    std::string gain_a = r.gain_average_pct
                             ? (std::to_string(static_cast<long>(std::lround(
                                    *r.gain_average_pct))) + "%")
                             : "-";
    std::string gain_h = r.gain_highest_pct
                             ? (std::to_string(static_cast<long>(std::lround(
                                    *r.gain_highest_pct))) + "%")
                             : "-";
    std::string reach = r.median_frames_to_threshold >= 0
                            ? std::to_string(r.median_frames_to_threshold)
                            : "never";
    std::snprintf(line, sizeof(line), "%-14s %5d  %9.3f  %9.3f  %9s  %9s  %s\n",
                  r.condition.c_str(), r.seeds, r.average_score,
                  r.highest_score, gain_a.c_str(), gain_h.c_str(),
                  reach.c_str());
    out << line;
  }
  if (!baseline_present)
    out << "note: no baseline condition among the inputs; gain columns omitted\n";
  out << "gain = (condition - baseline) / baseline * 100%, both on smoothed returns\n";
  return out.str();
}

void render_report(const std::vector<LoadedRun>& runs, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::size_t skipped = 0;

  std::vector<PlotSeries> comparison;
  for (const LoadedRun& run : runs) {
    skipped += run.skipped_rows;
    const int window = window_points(run.smoothing_window_frames, run.eval_interval);

    // Per-agent smoothed reward curves, averaged over seeds.
    std::vector<PlotSeries> reward_series;
    const int team_size =
        run.seeds.empty() ? 0 : static_cast<int>(run.seeds.front().size());
    for (int agent = 0; agent < team_size; ++agent) {
      PlotSeries s;
      s.label = "agent " + std::to_string(agent);
      std::size_t min_len = std::numeric_limits<std::size_t>::max();
      for (const auto& agents : run.seeds)
        min_len = std::min(min_len, agents[agent].rows.size());
      if (min_len == std::numeric_limits<std::size_t>::max()) min_len = 0;
      for (std::size_t i = 0; i < min_len; ++i) {
        double sum = 0.0;
        for (const auto& agents : run.seeds) {
          const std::vector<double> smooth =
              moving_average(eval_returns(agents[agent]), window);
          sum += smooth[i];
        }
        s.x.push_back(static_cast<double>(run.seeds.front()[agent].rows[i].frame));
        s.y.push_back(sum / static_cast<double>(run.seeds.size()));
      }
      reward_series.push_back(std::move(s));
    }
    write_line_chart(out_dir + "/rewards_" + run.condition + ".svg",
                     "Evaluation return (" + run.condition + ")", "frame",
                     "smoothed return", reward_series);

    // Teammate-KL curve, mean over seeds.
    PlotSeries kl;
    kl.label = run.condition;
    std::size_t min_rounds = std::numeric_limits<std::size_t>::max();
    for (const LoadedTeamSeries& t : run.team_series)
      min_rounds = std::min(min_rounds, t.rows.size());
    if (min_rounds == std::numeric_limits<std::size_t>::max()) min_rounds = 0;
    for (std::size_t i = 0; i < min_rounds; ++i) {
      double sum = 0.0;
      for (const LoadedTeamSeries& t : run.team_series) sum += t.rows[i].mean();
      kl.x.push_back(static_cast<double>(run.team_series.front().rows[i].frame));
      kl.y.push_back(sum / static_cast<double>(run.team_series.size()));
    }
    write_line_chart(out_dir + "/teammate_kl_" + run.condition + ".svg",
                     "Teammate KL (" + run.condition + ")", "frame", "mean KL",
                     {kl});

    // Cross-condition comparison: smoothed return averaged over seeds+agents.
    PlotSeries mean_series;
    mean_series.label = run.condition;
    std::size_t min_len = std::numeric_limits<std::size_t>::max();
    for (const auto& agents : run.seeds)
      for (const LoadedAgentSeries& a : agents)
        min_len = std::min(min_len, a.rows.size());
    if (min_len == std::numeric_limits<std::size_t>::max()) min_len = 0;
    for (std::size_t i = 0; i < min_len; ++i) {
      double sum = 0.0;
      int count = 0;
      for (const auto& agents : run.seeds)
        for (const LoadedAgentSeries& a : agents) {
          sum += moving_average(eval_returns(a), window)[i];
          ++count;
        }
      mean_series.x.push_back(
          static_cast<double>(run.seeds.front().front().rows[i].frame));
      mean_series.y.push_back(sum / count);
    }
    comparison.push_back(std::move(mean_series));
  }
  write_line_chart(out_dir + "/comparison.svg", "Schedule comparison", "frame",
                   "smoothed return", comparison);

  const std::vector<ConditionSummary> rows = summarize_runs(runs);
  bool baseline_present = false;
  for (const ConditionSummary& r : rows)
    if (r.condition == "baseline") baseline_present = true;
  std::ofstream summary(out_dir + "/summary.txt");
  summary << format_summary(rows, baseline_present);
  summary << "skipped metric rows: " << skipped << "\n";
}

}  // namespace ltcr
