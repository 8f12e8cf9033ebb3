#include "ltcr/team_env.hpp"

#include <algorithm>

#include "ltcr/errors.hpp"

namespace ltcr {

IndependentTeamEnv::IndependentTeamEnv(const Env& prototype, int team_size)
    : prototype_(prototype.clone_fresh()) {
  require_config(team_size >= 1, "team env: team size must be >= 1");
  envs_.resize(team_size);
  observations_.resize(team_size);
  finished_.assign(team_size, true);
  episode_counter_.assign(team_size, 0);
  for (auto& e : envs_) e = prototype.clone_fresh();
}

void IndependentTeamEnv::reset(std::uint64_t seed) {
  seed_ = seed;
  for (int i = 0; i < team_size(); ++i) {
    episode_counter_[i] = 0;
    observations_[i] = envs_[i]->reset(Rng::mix(seed_, i, episode_counter_[i]));
    finished_[i] = false;
  }
}

bool IndependentTeamEnv::active(int agent) const { return !finished_[agent]; }

const std::vector<double>& IndependentTeamEnv::observation(int agent) const {
  return observations_[agent];
}

void IndependentTeamEnv::step(std::span<const int> actions,
                              std::vector<TeamStepResult>& out) {
  out.resize(team_size());
  for (int i = 0; i < team_size(); ++i) {
    TeamStepResult& r = out[i];
    r = {};
    if (finished_[i]) continue;
    StepResult sr = envs_[i]->step(actions[i]);
    r.reward = sr.reward;
    r.terminal = sr.terminal;
    if (sr.terminal) {
      r.terminal_obs = std::move(sr.observation);
      if (auto_reset_) {
        ++episode_counter_[i];
        observations_[i] = envs_[i]->reset(Rng::mix(seed_, i, episode_counter_[i]));
      } else {
        finished_[i] = true;
      }
    } else {
      observations_[i] = std::move(sr.observation);
    }
  }
}

bool IndependentTeamEnv::all_done() const {
  return std::all_of(finished_.begin(), finished_.end(), [](bool f) { return f; });
}

std::unique_ptr<TeamEnv> IndependentTeamEnv::fresh_clone() const {
  return std::make_unique<IndependentTeamEnv>(*prototype_, team_size());
}

SpaceBattleTeamEnv::SpaceBattleTeamEnv(const SpaceBattleTeamConfig& config)
    : config_(config), world_(config.world) {
  observations_.resize(team_size());
  rewards_.resize(world_.ship_count());
  all_actions_.resize(world_.ship_count());
  if (config_.opponents == OpponentMode::kLearning) {
    AgentConfig oc = config_.opponent_agent;
    oc.shape.input_dim = world_.observation_dim();
    oc.shape.action_count = SpaceBattleWorld::kActionCount;
    opponent_agents_.reserve(team_size());
    for (int s = 0; s < team_size(); ++s)
      opponent_agents_.emplace_back(1000 + s, oc,
                                    Rng::mix(config_.opponent_seed, s));
    opponent_prev_obs_.resize(team_size());
    opponent_prev_action_.assign(team_size(), 0);
  }
}

void SpaceBattleTeamEnv::reset(std::uint64_t seed) {
  seed_ = seed;
  episode_counter_ = 0;
  start_episode();
}

void SpaceBattleTeamEnv::start_episode() {
  world_.reset(Rng::mix(seed_, episode_counter_));
  refresh_observations();
  if (config_.opponents == OpponentMode::kLearning)
    for (int s = 0; s < team_size(); ++s)
      opponent_prev_obs_[s] = world_.observation(opponent_ship(s));
}

void SpaceBattleTeamEnv::refresh_observations() {
  for (int i = 0; i < team_size(); ++i) observations_[i] = world_.observation(i);
}

bool SpaceBattleTeamEnv::active(int agent) const {
  return !world_.done() && world_.ship(agent).alive();
}

const std::vector<double>& SpaceBattleTeamEnv::observation(int agent) const {
  return observations_[agent];
}

int SpaceBattleTeamEnv::opponent_action(int slot) {
  const int ship = opponent_ship(slot);
  if (!world_.ship(ship).alive()) return SpaceBattleWorld::kMove;
  switch (config_.opponents) {
    case OpponentMode::kScripted:
      return scripted_patrol_action(world_, ship);
    case OpponentMode::kLearning: {
      opponent_prev_obs_[slot] = world_.observation(ship);
      const int a = opponent_agents_[slot].act(opponent_prev_obs_[slot]);
      opponent_prev_action_[slot] = a;
      return a;
    }
    case OpponentMode::kFrozen: {
      const std::vector<double> obs = world_.observation(ship);
      ForwardTrace trace;
      forward(frozen_opponents_[slot], obs, trace);
      SupportGrid grid = make_support(-1.0, 1.0, frozen_opponents_[slot].shape().atom_count);
      return greedy_action(grid, trace.probs.data(),
                           SpaceBattleWorld::kActionCount);
    }
  }
  return SpaceBattleWorld::kMove;
}

void SpaceBattleTeamEnv::step(std::span<const int> actions,
                              std::vector<TeamStepResult>& out) {
  require(!world_.done(), "space battle team: step on a finished episode");
  out.resize(team_size());

  std::vector<bool> was_alive(world_.ship_count());
  for (int i = 0; i < world_.ship_count(); ++i)
    was_alive[i] = world_.ship(i).alive();

  for (int i = 0; i < team_size(); ++i)
    all_actions_[i] = was_alive[i] ? actions[i] : SpaceBattleWorld::kMove;
  for (int s = 0; s < team_size(); ++s)
    all_actions_[opponent_ship(s)] = opponent_action(s);

  world_.step(all_actions_, rewards_);
  const bool episode_over = world_.done();

  for (int i = 0; i < team_size(); ++i) {
    TeamStepResult& r = out[i];
    r = {};
    if (!was_alive[i]) continue;
    r.reward = rewards_[i];
    r.terminal = episode_over || !world_.ship(i).alive();
    if (r.terminal) r.terminal_obs = world_.observation(i);
  }

  if (config_.opponents == OpponentMode::kLearning) {
    for (int s = 0; s < team_size(); ++s) {
      const int ship = opponent_ship(s);
      if (!was_alive[ship]) continue;
      CategoricalAgent& agent = opponent_agents_[s];
      Transition t;
      t.state = opponent_prev_obs_[s];
      t.action = opponent_prev_action_[s];
      t.reward = rewards_[ship];
      t.next_state = world_.observation(ship);
      t.terminal = episode_over || !world_.ship(ship).alive();
      agent.observe(std::move(t));
      if (agent.ready_to_train()) agent.train_step();
    }
  }

  if (episode_over && auto_reset_) {
    ++episode_counter_;
    start_episode();
  } else {
    refresh_observations();
  }
}

std::unique_ptr<TeamEnv> SpaceBattleTeamEnv::fresh_clone() const {
  SpaceBattleTeamConfig clone_config = config_;
  auto clone = std::make_unique<SpaceBattleTeamEnv>([&] {
    if (config_.opponents == OpponentMode::kLearning) {
      // Evaluation plays against a frozen snapshot of the learned opponents.
      clone_config.opponents = OpponentMode::kFrozen;
    }
    return clone_config;
  }());
  if (config_.opponents == OpponentMode::kLearning) {
    clone->frozen_opponents_.clear();
    for (const CategoricalAgent& a : opponent_agents_)
      clone->frozen_opponents_.push_back(a.net());
  } else {
    clone->frozen_opponents_ = frozen_opponents_;
  }
  return clone;
}

}  // namespace ltcr
