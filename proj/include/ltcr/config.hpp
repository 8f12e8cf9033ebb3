#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltcr/agent.hpp"
#include "ltcr/cartpole.hpp"
#include "ltcr/team_env.hpp"
#include "ltcr/trainer.hpp"

namespace ltcr {

/// Fully resolved experiment description. Parsing fills every field, either
/// from the file or from the per-environment defaults, and rejects unknown
/// keys, so the manifest written next to a run always shows the complete
/// effective configuration.
struct ExperimentConfig {
  std::string env_name;  // "cartpole" or "space_battle"
  CartPoleParams cartpole;
  SpaceBattleTeamConfig space_battle;

  int team_size = 2;
  long total_frames = 100000;
  std::vector<std::uint64_t> seeds;
  AgentConfig agent;
  ProtocolConfig protocol;

  long smoothing_window_frames = 500;
  double eval_threshold = 195.0;
  bool trace_episodes = false;
  std::string output_dir = "runs/out";
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

/// The resolved configuration, suitable for the run manifest.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Builds the team environment the config describes.
std::unique_ptr<TeamEnv> make_team_env(const ExperimentConfig& config);

/// Smoothing window expressed in evaluation points (>= 1).
int smoothing_points(const ExperimentConfig& config);

}  // namespace ltcr
