#pragma once

#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace ltcr {

struct SpaceBattleParams {
  int team_size = 2;  // ships per team
  double world_size = 100.0;
  double move_step = 1.0;
  double fuel_per_move = 0.1;
  double turn_angle = std::numbers::pi / 16.0;
  double projectile_speed = 3.0;
  int projectile_lifetime = 20;
  double projectile_hit_radius = 1.5;
  double projectile_damage = 10.0;
  double ram_radius = 1.0;
  double ram_damage = 5.0;
  int initial_missiles = 50;
  double initial_fuel = 500.0;
  double initial_health = 100.0;
  int max_steps = 1000;
  double reward_projectile_hit = 5.0;
  double reward_ram_hit = 1.0;
  double reward_hit_received = -5.0;
  double reward_team_elimination = 20.0;
};

struct ShipState {
  double x = 0.0, y = 0.0, theta = 0.0;
  int missiles = 0;
  double fuel = 0.0;
  double health = 0.0;
  bool alive() const { return health > 0.0; }
};

struct Projectile {
  int owner = 0;  // global ship index
  int team = 0;
  double x = 0.0, y = 0.0, theta = 0.0;
  int ttl = 0;
};

/// Two-team ship battle on a toroidal 2D world with continuous positions and
/// discrete time. Ships turn, move and fire; projectile hits and ramming
/// drain the opponent's health. Ships are indexed globally: 0..M-1 is team 0,
/// M..2M-1 is team 1.
class SpaceBattleWorld {
 public:
  static constexpr int kTurnCcw = 0;
  static constexpr int kTurnCw = 1;
  static constexpr int kMove = 2;
  static constexpr int kFire = 3;
  static constexpr int kActionCount = 4;

  explicit SpaceBattleWorld(const SpaceBattleParams& params = {});

  void reset(std::uint64_t seed);

  /// Advances one step. `actions` has one entry per ship (global order);
  /// actions of dead ships are ignored. `rewards_out` (same length) receives
  /// each ship's reward for this step.
  void step(std::span<const int> actions, std::span<double> rewards_out);

  /// Fixed-length observation for one ship: own
  /// (x, y, theta, missiles, fuel, health) normalized, then (relative
  /// position in the ship's body frame, relative heading) for every other
  /// ship — teammates first, then enemies, by index. Dead ships observe (and
  /// are observed as) zeros.
  std::vector<double> observation(int ship) const;
  int observation_dim() const;

  bool done() const { return done_; }
  int step_count() const { return steps_; }
  int ship_count() const { return 2 * params_.team_size; }
  int team_of(int ship) const { return ship / params_.team_size; }
  bool team_alive(int team) const;
  const ShipState& ship(int i) const { return ships_[i]; }
  ShipState& mutable_ship(int i) { return ships_[i]; }
  const std::vector<Projectile>& projectiles() const { return projectiles_; }
  const SpaceBattleParams& params() const { return params_; }

  double torus_delta(double a, double b) const;  // shortest signed b - a

 private:
  void apply_action(int ship_idx, int action);
  void move_projectiles(std::span<double> rewards);
  void resolve_ramming(std::span<double> rewards);

  SpaceBattleParams params_;
  std::vector<ShipState> ships_;
  std::vector<Projectile> projectiles_;
  int steps_ = 0;
  bool done_ = true;
};

/// Deterministic patrol controller for the opponent team: cruise, swing the
/// heading on a fixed cycle, fire periodically.
int scripted_patrol_action(const SpaceBattleWorld& world, int ship_idx);

}  // namespace ltcr
