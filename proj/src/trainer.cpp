#include "ltcr/trainer.hpp"

#include <algorithm>

#include "ltcr/errors.hpp"

namespace ltcr {

namespace {
constexpr std::uint64_t kProtoStream = 0x10;
constexpr std::uint64_t kProbeStream = 0x11;
constexpr std::uint64_t kEvalSeedStream = 0x12;
constexpr long kEvalStepGuard = 1'000'000;
}  // namespace

TeamTrainer::TeamTrainer(const std::vector<AgentConfig>& agent_configs,
                         const ProtocolConfig& protocol,
                         std::unique_ptr<TeamEnv> env,
                         std::uint64_t master_seed, MetricsSink* sink)
    : protocol_(protocol),
      env_(std::move(env)),
      shared_(protocol.memory_capacity),
      sink_(sink),
      probe_rng_(Rng::mix(master_seed, kProbeStream)),
      eval_seed_base_(Rng::mix(master_seed, kEvalSeedStream)) {
  require_config(!agent_configs.empty(), "trainer: empty team");
  require_config(static_cast<int>(agent_configs.size()) == env_->team_size(),
                 "trainer: team size does not match the environment");
  require_config(protocol.schedule.revisit_steps >= 0 &&
                     protocol.schedule.digest_steps >= 0,
                 "trainer: negative step counts");

  const AgentConfig& first = agent_configs.front();
  agents_.reserve(agent_configs.size());
  for (std::size_t i = 0; i < agent_configs.size(); ++i) {
    const AgentConfig& c = agent_configs[i];
    // Teaching only makes sense when everyone speaks the same support.
    require_config(c.v_min == first.v_min && c.v_max == first.v_max &&
                       c.shape.atom_count == first.shape.atom_count,
                   "trainer: all agents must share the same support grid");
    require_config(c.shape.input_dim == env_->observation_dim() &&
                       c.shape.action_count == env_->action_count(),
                   "trainer: agent shape does not match the environment");
    agents_.emplace_back(static_cast<int>(i), c, master_seed);
    proto_rngs_.emplace_back(Rng::mix(master_seed, i, kProtoStream));
  }

  const int M = team_size();
  last_c51_loss_.assign(M, 0.0);
  last_distill_loss_.assign(M, 0.0);
  prev_obs_.resize(M);
  actions_.resize(M);
  active_.resize(M);
  step_results_.resize(M);
  staged_uploads_.resize(M);

  env_->reset(Rng::mix(master_seed, 0xE0));
}

RoundReport TeamTrainer::blank_report() const {
  RoundReport report;
  const int M = team_size();
  report.start_frame = frame_;
  report.c51_loss.assign(M, 0.0);
  report.revisit_steps_done.assign(M, 0);
  report.distill_loss.assign(M, 0.0);
  report.digest_steps_done.assign(M, 0);
  report.digest_items.assign(M, 0);
  report.digest_skipped.assign(M, false);
  return report;
}

RoundReport TeamTrainer::run_round(long explore_frames) {
  RoundReport report = blank_report();
  const int M = team_size();

  phase_explore(explore_frames, report);

  bool committed = false;
  try {
    phase_communicate(report);
    committed = true;
    // The round's teammate KL is measured on the demonstrations just
    // exchanged, before anyone digests them: how far apart the agents'
    // predictions are at the features currently being taught.
    measure_round_kl(report);
    phase_digest(report);
    phase_revisit(report);
  } catch (...) {
    if (committed)
      shared_.rollback_round();
    else
      shared_.abort_round();
    throw;
  }

  report.end_frame = frame_;
  if (sink_ && !report.pair_kl.empty()) {
    TeamKlRow row;
    row.frame = frame_;
    row.pair_kl = report.pair_kl;
    sink_->team_row(row);
  }
  reports_.push_back(report);
  return report;
}

void TeamTrainer::measure_round_kl(RoundReport& report) {
  const int M = team_size();
  round_demos_ = shared_.current_round();
  if (round_demos_.empty()) return;
  for (int i = 0; i < M; ++i) {
    for (int j = i + 1; j < M; ++j) {
      // Mean over both directions: teacher's demonstration against the
      // other's current prediction at the same feature.
      double sum = 0.0;
      long count = 0;
      for (const Demonstration& d : round_demos_) {
        int student;
        if (d.teacher_id == static_cast<std::uint16_t>(i))
          student = j;
        else if (d.teacher_id == static_cast<std::uint16_t>(j))
          student = i;
        else
          continue;
        const auto dists = forward_dists(agents_[student].net(), d.feature.state);
        sum += kl_divergence(d.probs, dists[d.feature.action]);
        ++count;
      }
      report.pair_kl.push_back(count ? sum / count : 0.0);
    }
  }
}

void TeamTrainer::run(long total_frames) {
  while (frame_ < total_frames)
    run_round(std::min(protocol_.schedule.frames_per_round, total_frames - frame_));
}

void TeamTrainer::phase_explore(long frames, RoundReport& report) {
  const int M = team_size();
  for (auto& u : staged_uploads_) u.clear();

  for (long f = 0; f < frames; ++f) {
    for (int i = 0; i < M; ++i) {
      active_[i] = env_->active(i) ? 1 : 0;
      if (active_[i]) {
        prev_obs_[i] = env_->observation(i);
        actions_[i] = agents_[i].act(prev_obs_[i]);
      } else {
        actions_[i] = 0;
      }
    }
    env_->step(actions_, step_results_);
    const bool tracing = sink_ && sink_->wants_traces();
    for (int i = 0; i < M; ++i) {
      if (!active_[i]) continue;
      const TeamStepResult& r = step_results_[i];
      Transition t;
      t.state = std::move(prev_obs_[i]);
      t.action = actions_[i];
      t.reward = r.reward;
      t.next_state = r.terminal ? r.terminal_obs : env_->observation(i);
      t.terminal = r.terminal;
      if (proto_rngs_[i].bernoulli(protocol_.upload_rate))
        staged_uploads_[i].push_back({t.state, t.action});
      if (tracing)
        sink_->trace_row(i, {frame_ + 1, t.action, t.reward, t.terminal, t.state});
      agents_[i].observe(std::move(t));
    }
    ++frame_;
    if (protocol_.eval_interval > 0 && frame_ % protocol_.eval_interval == 0)
      emit_eval_rows();
  }

  // Upload barrier: features enter the shared store in agent order.
  for (int i = 0; i < M; ++i) {
    shared_.add_features(static_cast<std::uint16_t>(i), staged_uploads_[i]);
    report.features_added += staged_uploads_[i].size();
  }
  if (probes_.empty()) freeze_probes();
}

void TeamTrainer::phase_communicate(RoundReport& report) {
  const int M = team_size();
  const std::size_t available = shared_.feature_count();
  if (available == 0) {
    // Nothing to demonstrate on; the round is recorded as an empty commit.
    shared_.commit_round();
    return;
  }
  const std::uint32_t round = shared_.committed_rounds();
  for (int i = 0; i < M; ++i) {
    const int n = static_cast<int>(
        std::min<std::size_t>(protocol_.subset_size, available));
    // Partial Fisher-Yates over the store indices: n distinct features.
    std::vector<std::size_t> indices(available);
    for (std::size_t k = 0; k < available; ++k) indices[k] = k;
    for (int k = 0; k < n; ++k) {
      const int pick = k + proto_rngs_[i].uniform_int(static_cast<int>(available) - k);
      std::swap(indices[k], indices[pick]);
    }
    for (int k = 0; k < n; ++k) {
      const SharedMemory::StoredFeature sf = shared_.feature_at(indices[k]);
      Demonstration demo;
      demo.round = round;
      demo.teacher_id = static_cast<std::uint16_t>(i);
      demo.feature = sf.feature;
      demo.feature_id = sf.id;
      const auto dists = forward_dists(agents_[i].net(), sf.feature.state);
      demo.probs = dists[sf.feature.action];
      shared_.stage(std::move(demo));
      ++report.demos_published;
    }
  }
  shared_.commit_round();
}

void TeamTrainer::phase_digest(RoundReport& report) {
  const int M = team_size();
  if (protocol_.schedule.digest_steps == 0) return;
  round_demos_ = shared_.current_round();

  for (int j = 0; j < M; ++j) {
    // Group foreign demonstrations by feature identity, first-seen order.
    std::vector<std::uint32_t> ids;
    std::vector<std::vector<const std::vector<double>*>> groups;
    std::vector<const Demonstration*> group_demo;
    for (const Demonstration& d : round_demos_) {
      if (d.teacher_id == static_cast<std::uint16_t>(j)) continue;
      auto it = std::find(ids.begin(), ids.end(), d.feature_id);
      if (it == ids.end()) {
        ids.push_back(d.feature_id);
        groups.push_back({&d.probs});
        group_demo.push_back(&d);
      } else {
        groups[it - ids.begin()].push_back(&d.probs);
      }
    }
    if (ids.empty()) {
      report.digest_skipped[j] = true;
      continue;
    }

    // Soft targets where several teachers demonstrated the same feature.
    std::vector<std::vector<double>> averaged;
    std::vector<DistillItem> items(ids.size());
    for (std::size_t g = 0; g < ids.size(); ++g) {
      items[g].state = group_demo[g]->feature.state;
      items[g].action = group_demo[g]->feature.action;
      if (groups[g].size() == 1) {
        items[g].target = *groups[g][0];
      } else {
        averaged.push_back(soft_target(
            std::span<const std::vector<double>* const>(groups[g])));
        items[g].target = averaged.back();
      }
    }
    // `averaged` may reallocate while growing; rebind spans afterwards.
    std::size_t avg_idx = 0;
    for (std::size_t g = 0; g < ids.size(); ++g)
      if (groups[g].size() > 1) items[g].target = averaged[avg_idx++];

    report.digest_items[j] = static_cast<int>(items.size());
    double loss = 0.0;
    for (int s = 0; s < protocol_.schedule.digest_steps; ++s) {
      loss = agents_[j].distill_step(items);
      ++report.digest_steps_done[j];
    }
    report.distill_loss[j] = loss;
    last_distill_loss_[j] = loss;
  }
}

void TeamTrainer::phase_revisit(RoundReport& report) {
  const int M = team_size();
  for (int j = 0; j < M; ++j) {
    double sum = 0.0;
    int done = 0;
    for (int s = 0; s < protocol_.schedule.revisit_steps; ++s) {
      if (!agents_[j].ready_to_train()) break;  // shortfall is reported
      sum += agents_[j].train_step();
      ++done;
    }
    report.revisit_steps_done[j] = done;
    report.c51_loss[j] = done > 0 ? sum / done : 0.0;
    if (done > 0) last_c51_loss_[j] = report.c51_loss[j];
  }
}

void TeamTrainer::freeze_probes() {
  const std::size_t available = shared_.feature_count();
  if (available == 0) return;
  const std::size_t n = std::min<std::size_t>(protocol_.probe_size, available);
  std::vector<std::size_t> indices(available);
  for (std::size_t k = 0; k < available; ++k) indices[k] = k;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t pick =
        k + probe_rng_.uniform_int(static_cast<int>(available - k));
    std::swap(indices[k], indices[pick]);
  }
  probes_.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    probes_.push_back(shared_.feature_at(indices[k]).feature);
}

double TeamTrainer::teammate_kl(int a, int b) const {
  require(!probes_.empty(), "teammate_kl: empty probe set");
  double sum = 0.0;
  for (const FeatureVector& f : probes_) {
    const auto da = forward_dists(agents_[a].net(), f.state);
    const auto db = forward_dists(agents_[b].net(), f.state);
    sum += kl_divergence(da[f.action], db[f.action]);
  }
  return sum / static_cast<double>(probes_.size());
}

double TeamTrainer::teammate_kl_symmetric(int a, int b) const {
  return 0.5 * (teammate_kl(a, b) + teammate_kl(b, a));
}

std::vector<double> TeamTrainer::evaluate_team() {
  const int M = team_size();
  auto clone = env_->fresh_clone();
  clone->set_auto_reset(false);
  ++eval_events_;

  std::vector<double> totals(M, 0.0);
  std::vector<int> acts(M, 0);
  std::vector<TeamStepResult> results;
  for (int e = 0; e < protocol_.eval_episodes; ++e) {
    clone->reset(Rng::mix(eval_seed_base_, eval_events_, e));
    long guard = 0;
    while (!clone->all_done() && guard++ < kEvalStepGuard) {
      for (int i = 0; i < M; ++i)
        acts[i] = clone->active(i)
                      ? agents_[i].act(clone->observation(i), /*evaluation=*/true)
                      : 0;
      clone->step(acts, results);
      for (int i = 0; i < M; ++i) totals[i] += results[i].reward;
    }
  }
  for (double& t : totals) t /= protocol_.eval_episodes;
  return totals;
}

void TeamTrainer::emit_eval_rows() {
  const std::vector<double> returns = evaluate_team();
  if (!sink_) return;
  for (int i = 0; i < team_size(); ++i) {
    AgentMetricsRow row;
    row.frame = frame_;
    row.eval_return = returns[i];
    row.c51_loss = last_c51_loss_[i];
    row.distill_loss = last_distill_loss_[i];
    row.epsilon = agents_[i].epsilon_now();
    sink_->agent_row(i, row);
  }
}

}  // namespace ltcr
