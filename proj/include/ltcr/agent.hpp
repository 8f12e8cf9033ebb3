#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ltcr/distribution.hpp"
#include "ltcr/env.hpp"
#include "ltcr/kernels.hpp"
#include "ltcr/network.hpp"
#include "ltcr/replay.hpp"
#include "ltcr/rng.hpp"

namespace ltcr {

/// Linear decay from `start` to `end` over `decay_frames`, constant after.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.01;
  long decay_frames = 10000;
  double evaluation = 0.001;

  double at(long frame) const {
    if (decay_frames <= 0 || frame >= decay_frames) return end;
    const double f = static_cast<double>(frame) / static_cast<double>(decay_frames);
    return start + f * (end - start);
  }
};

struct AgentConfig {
  MlpShape shape;
  AdamConfig adam;
  double v_min = 0.0;
  double v_max = 200.0;
  double discount = 0.99;
  std::size_t replay_capacity = 50000;
  int batch_size = 32;
  long target_sync_steps = 500;
  long warmup_frames = 1000;
  EpsilonSchedule epsilon;
};

/// One categorical DQN learner: epsilon-greedy acting, private replay,
/// KL-projected Bellman updates against a frozen target copy. The same
/// optimizer also applies distillation gradients when the agent is taught by
/// teammates; the two step counters keep the attribution.
class CategoricalAgent {
 public:
  CategoricalAgent(int id, const AgentConfig& config, std::uint64_t master_seed);

  int id() const { return id_; }
  const AgentConfig& config() const { return config_; }
  const SupportGrid& grid() const { return grid_; }
  const Mlp& net() const { return net_; }
  Mlp& mutable_net() { return net_; }
  const Mlp& target_net() const { return target_; }
  const ReplayBuffer& replay() const { return replay_; }

  long frames() const { return frames_; }
  long c51_steps() const { return c51_steps_; }
  long distill_steps() const { return distill_steps_; }

  double epsilon_now() const { return config_.epsilon.at(frames_); }

  /// Epsilon-greedy action. Training mode reads epsilon off the schedule at
  /// the current frame counter; evaluation mode uses the fixed evaluation
  /// epsilon and a separate random stream so that measuring an agent never
  /// perturbs its training trajectory.
  int act(std::span<const double> state, bool evaluation = false);

  /// Stores a transition and advances the frame counter.
  void observe(Transition t);

  /// Whether enough frames/replay are available to train.
  bool ready_to_train() const;

  /// One C51 update on a fresh uniform batch. Returns the batch-mean KL.
  double train_step();

  /// One distillation update on the given items. Returns the mean KL.
  double distill_step(std::span<const DistillItem> items);

  /// Current KL between the agent's output at (state, action) and a target.
  double head_kl(std::span<const double> state, int action,
                 std::span<const double> target_probs) const;

  void sync_target_now() { target_ = net_; }

 private:
  void maybe_sync_target();

  int id_;
  AgentConfig config_;
  SupportGrid grid_;
  Mlp net_;
  Mlp target_;
  AdamState optimizer_;
  ReplayBuffer replay_;
  Rng act_rng_;
  Rng eval_rng_;
  Rng replay_rng_;
  long frames_ = 0;
  long c51_steps_ = 0;
  long distill_steps_ = 0;

  BatchWorkspace workspace_;
  GradBuffer mean_grad_;
  std::vector<std::size_t> batch_indices_;
  ForwardTrace act_trace_;
};

/// Mean undiscounted return over `episodes` with the evaluation epsilon.
double evaluate(CategoricalAgent& agent, Env& env, int episodes,
                std::uint64_t seed);

}  // namespace ltcr
