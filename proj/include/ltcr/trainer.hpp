#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ltcr/agent.hpp"
#include "ltcr/metrics.hpp"
#include "ltcr/protocol.hpp"
#include "ltcr/team_env.hpp"

namespace ltcr {

struct ProtocolConfig {
  PhaseSchedule schedule;
  int subset_size = 64;        // features each agent demonstrates per round
  double upload_rate = 0.1;    // chance an explored (s, a) is uploaded
  std::size_t memory_capacity = 10000;
  int probe_size = 256;        // frozen feature set for the teammate-KL series
  long eval_interval = 100;    // frames between evaluation rows
  int eval_episodes = 1;
};

struct RoundReport {
  long start_frame = 0;
  long end_frame = 0;
  std::vector<double> c51_loss;        // per agent, mean over revisit steps
  std::vector<int> revisit_steps_done;
  std::vector<double> distill_loss;    // per agent, final digest KL
  std::vector<int> digest_steps_done;
  std::vector<int> digest_items;       // foreign features distilled from
  std::vector<bool> digest_skipped;    // no foreign demonstrations this round
  /// Mean KL between each pair's demonstrations and the other side's current
  /// prediction at the same features, taken before digesting. Pairs (i<j).
  std::vector<double> pair_kl;
  std::size_t features_added = 0;
  std::size_t demos_published = 0;
};

/// Runs a team of categorical DQN learners through the four-phase loop:
/// Explore (act, fill private replay, upload features), Communicate (publish
/// demonstrations on a sampled feature subset), Digest (distill from
/// teammates' demonstrations), Revisit (train on private replay). Phases are
/// barrier-synchronized across the team; a failure between the explore
/// barrier and the end of the round rolls the demonstration round back.
class TeamTrainer {
 public:
  TeamTrainer(const std::vector<AgentConfig>& agent_configs,
              const ProtocolConfig& protocol, std::unique_ptr<TeamEnv> env,
              std::uint64_t master_seed, MetricsSink* sink);

  int team_size() const { return static_cast<int>(agents_.size()); }
  CategoricalAgent& agent(int i) { return agents_[i]; }
  const CategoricalAgent& agent(int i) const { return agents_[i]; }
  const SharedMemory& shared() const { return shared_; }
  const ProtocolConfig& protocol() const { return protocol_; }
  long frame() const { return frame_; }
  const std::vector<FeatureVector>& probe_set() const { return probes_; }
  const std::vector<RoundReport>& round_reports() const { return reports_; }

  RoundReport run_round() { return run_round(protocol_.schedule.frames_per_round); }
  RoundReport run_round(long explore_frames);
  void run(long total_frames);

  /// Mean KL from a's predictions to b's over the probe set (directional).
  double teammate_kl(int a, int b) const;
  double teammate_kl_symmetric(int a, int b) const;

  /// Evaluation rollout of the whole team at the evaluation epsilon.
  std::vector<double> evaluate_team();

  // The four phases are also usable individually (run_round sequences them
  // with the rollback-on-failure policy).
  void phase_explore(long frames, RoundReport& report);
  void phase_communicate(RoundReport& report);
  void phase_digest(RoundReport& report);
  void phase_revisit(RoundReport& report);
  RoundReport blank_report() const;

 private:
  void measure_round_kl(RoundReport& report);
  void freeze_probes();
  void emit_eval_rows();

  ProtocolConfig protocol_;
  std::vector<CategoricalAgent> agents_;
  std::unique_ptr<TeamEnv> env_;
  SharedMemory shared_;
  MetricsSink* sink_;

  std::vector<Rng> proto_rngs_;
  Rng probe_rng_;
  std::uint64_t eval_seed_base_;
  long frame_ = 0;
  std::uint64_t eval_events_ = 0;

  std::vector<FeatureVector> probes_;
  std::vector<double> last_c51_loss_;
  std::vector<double> last_distill_loss_;
  std::vector<RoundReport> reports_;

  // explore scratch
  std::vector<std::vector<double>> prev_obs_;
  std::vector<int> actions_;
  std::vector<char> active_;
  std::vector<TeamStepResult> step_results_;
  std::vector<std::vector<FeatureVector>> staged_uploads_;
  std::vector<Demonstration> round_demos_;
};

}  // namespace ltcr
