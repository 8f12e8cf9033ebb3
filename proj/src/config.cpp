#include "ltcr/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "ltcr/cartpole.hpp"
#include "ltcr/errors.hpp"

namespace ltcr {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& context) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key))
      throw ConfigError("unknown key \"" + key + "\" in " + context);
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for \"" + key + "\": " + e.what());
  }
}

void apply_environment_defaults(ExperimentConfig& c) {
  if (c.env_name == "cartpole") {
    c.agent.v_min = 0.0;
    c.agent.v_max = 200.0;
    c.agent.shape.hidden = {64, 64};
    c.agent.replay_capacity = 50000;
    c.protocol.eval_interval = 100;
    c.smoothing_window_frames = 500;
    c.eval_threshold = 195.0;
  } else {
    c.agent.v_min = -25.0;
    c.agent.v_max = 75.0;
    c.agent.shape.hidden = {128, 128};
    c.agent.replay_capacity = 200000;
    c.protocol.eval_interval = 1000;
    c.smoothing_window_frames = 1000;
    c.eval_threshold = 10.0;
  }
}

void parse_environment(const json& j, ExperimentConfig& c) {
  if (!j.contains("environment") || !j.at("environment").is_object())
    throw ConfigError("config needs an \"environment\" object");
  const json& env = j.at("environment");
  c.env_name = get_or<std::string>(env, "name", "");
  c.trace_episodes = get_or(env, "trace_episodes", false);
  if (c.env_name == "cartpole") {
    reject_unknown_keys(env,
                        {"name", "trace_episodes", "gravity", "cart_mass",
                         "pole_mass", "pole_half_length", "force_magnitude",
                         "time_step", "angle_limit_degrees", "position_limit",
                         "max_steps"},
                        "environment");
    CartPoleParams& p = c.cartpole;
    p.gravity = get_or(env, "gravity", p.gravity);
    p.cart_mass = get_or(env, "cart_mass", p.cart_mass);
    p.pole_mass = get_or(env, "pole_mass", p.pole_mass);
    p.pole_half_length = get_or(env, "pole_half_length", p.pole_half_length);
    p.force_magnitude = get_or(env, "force_magnitude", p.force_magnitude);
    p.time_step = get_or(env, "time_step", p.time_step);
    p.angle_limit_degrees = get_or(env, "angle_limit_degrees", p.angle_limit_degrees);
    p.position_limit = get_or(env, "position_limit", p.position_limit);
    p.max_steps = get_or(env, "max_steps", p.max_steps);
  } else if (c.env_name == "space_battle") {
    reject_unknown_keys(
        env, {"name", "trace_episodes", "opponents", "world_size", "move_step", "fuel_per_move",
              "turn_angle", "projectile_speed", "projectile_lifetime",
              "projectile_hit_radius", "projectile_damage", "ram_radius",
              "ram_damage", "initial_missiles", "initial_fuel",
              "initial_health", "max_steps", "reward_projectile_hit",
              "reward_ram_hit", "reward_hit_received",
              "reward_team_elimination"},
        "environment");
    SpaceBattleParams& p = c.space_battle.world;
    p.world_size = get_or(env, "world_size", p.world_size);
    p.move_step = get_or(env, "move_step", p.move_step);
    p.fuel_per_move = get_or(env, "fuel_per_move", p.fuel_per_move);
    p.turn_angle = get_or(env, "turn_angle", p.turn_angle);
    p.projectile_speed = get_or(env, "projectile_speed", p.projectile_speed);
    p.projectile_lifetime = get_or(env, "projectile_lifetime", p.projectile_lifetime);
    p.projectile_hit_radius = get_or(env, "projectile_hit_radius", p.projectile_hit_radius);
    p.projectile_damage = get_or(env, "projectile_damage", p.projectile_damage);
    p.ram_radius = get_or(env, "ram_radius", p.ram_radius);
    p.ram_damage = get_or(env, "ram_damage", p.ram_damage);
    p.initial_missiles = get_or(env, "initial_missiles", p.initial_missiles);
    p.initial_fuel = get_or(env, "initial_fuel", p.initial_fuel);
    p.initial_health = get_or(env, "initial_health", p.initial_health);
    p.max_steps = get_or(env, "max_steps", p.max_steps);
    p.reward_projectile_hit = get_or(env, "reward_projectile_hit", p.reward_projectile_hit);
    p.reward_ram_hit = get_or(env, "reward_ram_hit", p.reward_ram_hit);
    p.reward_hit_received = get_or(env, "reward_hit_received", p.reward_hit_received);
    p.reward_team_elimination = get_or(env, "reward_team_elimination", p.reward_team_elimination);
    const std::string opp = get_or<std::string>(env, "opponents", "scripted");
    if (opp == "scripted") {
      c.space_battle.opponents = OpponentMode::kScripted;
    } else if (opp == "learning") {
      c.space_battle.opponents = OpponentMode::kLearning;
    } else {
      throw ConfigError("environment.opponents must be \"scripted\" or \"learning\"");
    }
  } else {
    throw ConfigError("environment.name must be \"cartpole\" or \"space_battle\"");
  }
}

void parse_schedule(const json& j, ExperimentConfig& c) {
  if (!j.contains("schedule")) {
    c.protocol.schedule = PhaseSchedule::preset("baseline");
    return;
  }
  const json& s = j.at("schedule");
  if (s.is_string()) {
    c.protocol.schedule = PhaseSchedule::preset(s.get<std::string>());
  } else if (s.is_object()) {
    reject_unknown_keys(s, {"preset", "revisit_steps", "digest_steps", "frames_per_round"},
                        "schedule");
    if (s.contains("preset"))
      c.protocol.schedule = PhaseSchedule::preset(s.at("preset").get<std::string>());
    else
      c.protocol.schedule.name = "custom";
    c.protocol.schedule.revisit_steps = get_or(s, "revisit_steps", c.protocol.schedule.revisit_steps);
    c.protocol.schedule.digest_steps = get_or(s, "digest_steps", c.protocol.schedule.digest_steps);
    c.protocol.schedule.frames_per_round = get_or(s, "frames_per_round", c.protocol.schedule.frames_per_round);
    if (!s.contains("preset"))
      c.protocol.schedule.name = "custom-" + std::to_string(c.protocol.schedule.revisit_steps) +
                        "-" + std::to_string(c.protocol.schedule.digest_steps);
  } else {
    throw ConfigError("schedule must be a preset name or an object");
  }
  require_config(c.protocol.schedule.revisit_steps >= 0 && c.protocol.schedule.digest_steps >= 0,
                 "schedule: step counts must be >= 0");
  require_config(c.protocol.schedule.frames_per_round >= 1,
                 "schedule: frames_per_round must be >= 1");
}

void parse_agent(const json& j, ExperimentConfig& c) {
  if (!j.contains("agent")) return;
  const json& a = j.at("agent");
  reject_unknown_keys(
      a, {"hidden", "learning_rate", "beta1", "beta2", "adam_epsilon", "atoms",
          "v_min", "v_max", "discount", "replay_capacity", "batch_size",
          "target_sync_steps", "warmup_frames", "epsilon_start", "epsilon_end",
          "epsilon_decay_frames", "epsilon_eval"},
      "agent");
  c.agent.shape.hidden = get_or(a, "hidden", c.agent.shape.hidden);
  c.agent.adam.learning_rate = get_or(a, "learning_rate", c.agent.adam.learning_rate);
  c.agent.adam.beta1 = get_or(a, "beta1", c.agent.adam.beta1);
  c.agent.adam.beta2 = get_or(a, "beta2", c.agent.adam.beta2);
  c.agent.adam.epsilon = get_or(a, "adam_epsilon", c.agent.adam.epsilon);
  c.agent.shape.atom_count = get_or(a, "atoms", c.agent.shape.atom_count);
  c.agent.v_min = get_or(a, "v_min", c.agent.v_min);
  c.agent.v_max = get_or(a, "v_max", c.agent.v_max);
  c.agent.discount = get_or(a, "discount", c.agent.discount);
  c.agent.replay_capacity = get_or(a, "replay_capacity", c.agent.replay_capacity);
  c.agent.batch_size = get_or(a, "batch_size", c.agent.batch_size);
  c.agent.target_sync_steps = get_or(a, "target_sync_steps", c.agent.target_sync_steps);
  c.agent.warmup_frames = get_or(a, "warmup_frames", c.agent.warmup_frames);
  c.agent.epsilon.start = get_or(a, "epsilon_start", c.agent.epsilon.start);
  c.agent.epsilon.end = get_or(a, "epsilon_end", c.agent.epsilon.end);
  c.agent.epsilon.decay_frames = get_or(a, "epsilon_decay_frames", c.agent.epsilon.decay_frames);
  c.agent.epsilon.evaluation = get_or(a, "epsilon_eval", c.agent.epsilon.evaluation);
}

void parse_protocol(const json& j, ExperimentConfig& c) {
  if (!j.contains("protocol")) return;
  const json& p = j.at("protocol");
  reject_unknown_keys(p, {"subset_size", "upload_rate", "memory_capacity", "probe_size"},
                      "protocol");
  c.protocol.subset_size = get_or(p, "subset_size", c.protocol.subset_size);
  c.protocol.upload_rate = get_or(p, "upload_rate", c.protocol.upload_rate);
  c.protocol.memory_capacity = get_or(p, "memory_capacity", c.protocol.memory_capacity);
  c.protocol.probe_size = get_or(p, "probe_size", c.protocol.probe_size);
  require_config(c.protocol.upload_rate >= 0.0 && c.protocol.upload_rate <= 1.0,
                 "protocol.upload_rate must be in [0, 1]");
}

void parse_evaluation(const json& j, ExperimentConfig& c) {
  if (!j.contains("evaluation")) return;
  const json& e = j.at("evaluation");
  reject_unknown_keys(e, {"interval", "episodes", "smoothing_window_frames", "threshold"},
                      "evaluation");
  c.protocol.eval_interval = get_or(e, "interval", c.protocol.eval_interval);
  c.protocol.eval_episodes = get_or(e, "episodes", c.protocol.eval_episodes);
  c.smoothing_window_frames = get_or(e, "smoothing_window_frames", c.smoothing_window_frames);
  c.eval_threshold = get_or(e, "threshold", c.eval_threshold);
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  reject_unknown_keys(j,
                      {"environment", "team_size", "schedule", "total_frames",
                       "seeds", "agent", "protocol", "evaluation", "output_dir"},
                      "config root");

  ExperimentConfig c;
  parse_environment(j, c);
  apply_environment_defaults(c);
  c.agent.shape.atom_count = 51;

  c.team_size = get_or(j, "team_size", 2);
  require_config(c.team_size >= 1, "team_size must be >= 1");
  c.space_battle.world.team_size = c.team_size;

  c.total_frames = get_or<long>(j, "total_frames", 100000);
  require_config(c.total_frames >= 1, "total_frames must be >= 1");

  c.seeds = get_or(j, "seeds", std::vector<std::uint64_t>{1});
  require_config(!c.seeds.empty(), "seeds must not be empty");

  parse_schedule(j, c);
  // Epsilon decays over the first 10% of the run unless overridden.
  c.agent.epsilon.decay_frames = std::max<long>(1, c.total_frames / 10);
  parse_agent(j, c);
  parse_protocol(j, c);
  parse_evaluation(j, c);
  c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir);

  // Tie the network to the environment's interface.
  if (c.env_name == "cartpole") {
    c.agent.shape.input_dim = 4;
    c.agent.shape.action_count = 2;
  } else {
    c.agent.shape.input_dim = 6 + 3 * (2 * c.team_size - 1);
    c.agent.shape.action_count = SpaceBattleWorld::kActionCount;
  }
  c.space_battle.opponent_agent = c.agent;

  require_config(c.agent.shape.atom_count >= 2, "agent.atoms must be >= 2");
  require_config(c.agent.v_min < c.agent.v_max, "agent.v_min must be < v_max");
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  json env;
  env["name"] = c.env_name;
  env["trace_episodes"] = c.trace_episodes;
  if (c.env_name == "cartpole") {
    const CartPoleParams& p = c.cartpole;
    env["gravity"] = p.gravity;
    env["cart_mass"] = p.cart_mass;
    env["pole_mass"] = p.pole_mass;
    env["pole_half_length"] = p.pole_half_length;
    env["force_magnitude"] = p.force_magnitude;
    env["time_step"] = p.time_step;
    env["angle_limit_degrees"] = p.angle_limit_degrees;
    env["position_limit"] = p.position_limit;
    env["max_steps"] = p.max_steps;
  } else {
    const SpaceBattleParams& p = c.space_battle.world;
    env["world_size"] = p.world_size;
    env["move_step"] = p.move_step;
    env["fuel_per_move"] = p.fuel_per_move;
    env["turn_angle"] = p.turn_angle;
    env["projectile_speed"] = p.projectile_speed;
    env["projectile_lifetime"] = p.projectile_lifetime;
    env["projectile_hit_radius"] = p.projectile_hit_radius;
    env["projectile_damage"] = p.projectile_damage;
    env["ram_radius"] = p.ram_radius;
    env["ram_damage"] = p.ram_damage;
    env["initial_missiles"] = p.initial_missiles;
    env["initial_fuel"] = p.initial_fuel;
    env["initial_health"] = p.initial_health;
    env["max_steps"] = p.max_steps;
    env["reward_projectile_hit"] = p.reward_projectile_hit;
    env["reward_ram_hit"] = p.reward_ram_hit;
    env["reward_hit_received"] = p.reward_hit_received;
    env["reward_team_elimination"] = p.reward_team_elimination;
    env["opponents"] =
        c.space_battle.opponents == OpponentMode::kLearning ? "learning" : "scripted";
  }

  json agent;
  agent["hidden"] = c.agent.shape.hidden;
  agent["learning_rate"] = c.agent.adam.learning_rate;
  agent["beta1"] = c.agent.adam.beta1;
  agent["beta2"] = c.agent.adam.beta2;
  agent["adam_epsilon"] = c.agent.adam.epsilon;
  agent["atoms"] = c.agent.shape.atom_count;
  agent["v_min"] = c.agent.v_min;
  agent["v_max"] = c.agent.v_max;
  agent["discount"] = c.agent.discount;
  agent["replay_capacity"] = c.agent.replay_capacity;
  agent["batch_size"] = c.agent.batch_size;
  agent["target_sync_steps"] = c.agent.target_sync_steps;
  agent["warmup_frames"] = c.agent.warmup_frames;
  agent["epsilon_start"] = c.agent.epsilon.start;
  agent["epsilon_end"] = c.agent.epsilon.end;
  agent["epsilon_decay_frames"] = c.agent.epsilon.decay_frames;
  agent["epsilon_eval"] = c.agent.epsilon.evaluation;

  json schedule;
  schedule["preset"] = c.protocol.schedule.name;
  schedule["revisit_steps"] = c.protocol.schedule.revisit_steps;
  schedule["digest_steps"] = c.protocol.schedule.digest_steps;
  schedule["frames_per_round"] = c.protocol.schedule.frames_per_round;

  json protocol;
  protocol["subset_size"] = c.protocol.subset_size;
  protocol["upload_rate"] = c.protocol.upload_rate;
  protocol["memory_capacity"] = c.protocol.memory_capacity;
  protocol["probe_size"] = c.protocol.probe_size;

  json evaluation;
  evaluation["interval"] = c.protocol.eval_interval;
  evaluation["episodes"] = c.protocol.eval_episodes;
  evaluation["smoothing_window_frames"] = c.smoothing_window_frames;
  evaluation["threshold"] = c.eval_threshold;

  json out;
  out["environment"] = env;
  out["team_size"] = c.team_size;
  out["schedule"] = schedule;
  out["total_frames"] = c.total_frames;
  out["seeds"] = c.seeds;
  out["agent"] = agent;
  out["protocol"] = protocol;
  out["evaluation"] = evaluation;
  out["output_dir"] = c.output_dir;
  return out;
}

std::unique_ptr<TeamEnv> make_team_env(const ExperimentConfig& config) {
  if (config.env_name == "cartpole") {
    CartPoleEnv prototype(config.cartpole);
    return std::make_unique<IndependentTeamEnv>(prototype, config.team_size);
  }
  return std::make_unique<SpaceBattleTeamEnv>(config.space_battle);
}

int smoothing_points(const ExperimentConfig& config) {
  if (config.protocol.eval_interval <= 0) return 1;
  return std::max<int>(1, static_cast<int>(config.smoothing_window_frames /
                                           config.protocol.eval_interval));
}

}  // namespace ltcr
