#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ltcr/agent.hpp"
#include "ltcr/env.hpp"
#include "ltcr/space_battle.hpp"

namespace ltcr {

struct TeamStepResult {
  double reward = 0.0;
  bool terminal = false;
  /// Observation the episode ended on, valid only when terminal. With
  /// auto-reset enabled observation(i) already points into the next episode.
  std::vector<double> terminal_obs;
};

/// A team of learners seen as one synchronous environment: every frame all
/// active members act together. Backed either by independent single-player
/// episodes (one env instance per member) or by one shared world.
class TeamEnv {
 public:
  virtual ~TeamEnv() = default;
  virtual int team_size() const = 0;
  virtual int observation_dim() const = 0;
  virtual int action_count() const = 0;

  virtual void reset(std::uint64_t seed) = 0;
  /// Whether the member can act this frame (alive, episode running).
  virtual bool active(int agent) const = 0;
  virtual const std::vector<double>& observation(int agent) const = 0;
  /// One frame for the whole team. Actions of inactive members are ignored.
  virtual void step(std::span<const int> actions,
                    std::vector<TeamStepResult>& out) = 0;

  /// When disabled, finished episodes stay finished (evaluation rollouts).
  virtual void set_auto_reset(bool enabled) = 0;
  virtual bool all_done() const = 0;

  /// Fresh instance with the same configuration (current learned opponents,
  /// if any, are carried over frozen). Reset before use.
  virtual std::unique_ptr<TeamEnv> fresh_clone() const = 0;
};

/// Each member plays its own copy of a single-agent environment; the team
/// only shares knowledge, never state.
class IndependentTeamEnv final : public TeamEnv {
 public:
  IndependentTeamEnv(const Env& prototype, int team_size);

  int team_size() const override { return static_cast<int>(envs_.size()); }
  int observation_dim() const override { return envs_[0]->observation_dim(); }
  int action_count() const override { return envs_[0]->action_count(); }
  void reset(std::uint64_t seed) override;
  bool active(int agent) const override;
  const std::vector<double>& observation(int agent) const override;
  void step(std::span<const int> actions,
            std::vector<TeamStepResult>& out) override;
  void set_auto_reset(bool enabled) override { auto_reset_ = enabled; }
  bool all_done() const override;
  std::unique_ptr<TeamEnv> fresh_clone() const override;

 private:
  std::unique_ptr<Env> prototype_;
  std::vector<std::unique_ptr<Env>> envs_;
  std::vector<std::vector<double>> observations_;
  std::vector<bool> finished_;
  std::vector<std::uint64_t> episode_counter_;
  std::uint64_t seed_ = 0;
  bool auto_reset_ = true;
};

enum class OpponentMode {
  kScripted,  // deterministic patrol
  kLearning,  // independent learners embedded in the environment
  kFrozen,    // greedy play from fixed network copies (evaluation clones)
};

struct SpaceBattleTeamConfig {
  SpaceBattleParams world;
  OpponentMode opponents = OpponentMode::kScripted;
  /// Needed when opponents == kLearning.
  AgentConfig opponent_agent;
  std::uint64_t opponent_seed = 0;
};

/// Team 0 of the shared battle world, exposed as a TeamEnv; team 1 is driven
/// internally by the configured opponent controller.
class SpaceBattleTeamEnv final : public TeamEnv {
 public:
  explicit SpaceBattleTeamEnv(const SpaceBattleTeamConfig& config);

  int team_size() const override { return config_.world.team_size; }
  int observation_dim() const override { return world_.observation_dim(); }
  int action_count() const override { return SpaceBattleWorld::kActionCount; }
  void reset(std::uint64_t seed) override;
  bool active(int agent) const override;
  const std::vector<double>& observation(int agent) const override;
  void step(std::span<const int> actions,
            std::vector<TeamStepResult>& out) override;
  void set_auto_reset(bool enabled) override { auto_reset_ = enabled; }
  bool all_done() const override { return world_.done(); }
  std::unique_ptr<TeamEnv> fresh_clone() const override;

  const SpaceBattleWorld& world() const { return world_; }

 private:
  int opponent_ship(int slot) const { return config_.world.team_size + slot; }
  int opponent_action(int slot);
  void start_episode();
  void refresh_observations();

  SpaceBattleTeamConfig config_;
  SpaceBattleWorld world_;
  std::vector<std::vector<double>> observations_;
  std::vector<double> rewards_;
  std::vector<int> all_actions_;
  bool auto_reset_ = true;
  std::uint64_t seed_ = 0;
  std::uint64_t episode_counter_ = 0;

  // kLearning / kFrozen opponent state.
  std::vector<CategoricalAgent> opponent_agents_;
  std::vector<Mlp> frozen_opponents_;
  std::vector<std::vector<double>> opponent_prev_obs_;
  std::vector<int> opponent_prev_action_;
};

}  // namespace ltcr
