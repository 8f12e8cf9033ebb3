#include "ltcr/space_battle.hpp"

#include <algorithm>
#include <cmath>

#include "ltcr/errors.hpp"
#include "ltcr/rng.hpp"

namespace ltcr {

namespace {

double wrap_position(double v, double size) {
  v = std::fmod(v, size);
  if (v < 0.0) v += size;
  return v;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0.0) a += two_pi;
  return a - std::numbers::pi;
}

}  // namespace

SpaceBattleWorld::SpaceBattleWorld(const SpaceBattleParams& params)
    : params_(params) {
  require_config(params.team_size >= 1, "space battle: team_size must be >= 1");
  require_config(params.world_size > 0.0, "space battle: world_size must be > 0");
  ships_.resize(ship_count());
}

void SpaceBattleWorld::reset(std::uint64_t seed) {
  Rng rng(seed);
  const double w = params_.world_size;
  for (int i = 0; i < ship_count(); ++i) {
    ShipState& s = ships_[i];
    // Teams spawn in opposite thirds, facing inwards on average.
    const bool left = team_of(i) == 0;
    s.x = left ? rng.uniform(0.1 * w, 0.3 * w) : rng.uniform(0.7 * w, 0.9 * w);
    s.y = rng.uniform(0.1 * w, 0.9 * w);
    s.theta = wrap_angle(rng.uniform(-std::numbers::pi, std::numbers::pi));
    s.missiles = params_.initial_missiles;
    s.fuel = params_.initial_fuel;
    s.health = params_.initial_health;
  }
  projectiles_.clear();
  steps_ = 0;
  done_ = false;
}

double SpaceBattleWorld::torus_delta(double a, double b) const {
  double d = b - a;
  const double w = params_.world_size;
  d = std::fmod(d + 0.5 * w, w);
  if (d < 0.0) d += w;
  return d - 0.5 * w;
}

void SpaceBattleWorld::apply_action(int ship_idx, int action) {
  ShipState& s = ships_[ship_idx];
  switch (action) {
    case kTurnCcw:
      s.theta = wrap_angle(s.theta + params_.turn_angle);
      break;
    case kTurnCw:
      s.theta = wrap_angle(s.theta - params_.turn_angle);
      break;
    case kMove:
      if (s.fuel >= params_.fuel_per_move) {
        s.x = wrap_position(s.x + params_.move_step * std::cos(s.theta),
                            params_.world_size);
        s.y = wrap_position(s.y + params_.move_step * std::sin(s.theta),
                            params_.world_size);
        s.fuel -= params_.fuel_per_move;
      }
      break;
    case kFire:
      if (s.missiles > 0) {
        --s.missiles;
        projectiles_.push_back(
            {ship_idx, team_of(ship_idx), s.x, s.y, s.theta,
             params_.projectile_lifetime});
      }
      break;
    default:
      throw ContractViolation("space battle: invalid action index");
  }
}

void SpaceBattleWorld::move_projectiles(std::span<double> rewards) {
  const double radius2 =
      params_.projectile_hit_radius * params_.projectile_hit_radius;
  for (Projectile& p : projectiles_) {
    p.x = wrap_position(p.x + params_.projectile_speed * std::cos(p.theta),
                        params_.world_size);
    p.y = wrap_position(p.y + params_.projectile_speed * std::sin(p.theta),
                        params_.world_size);
    --p.ttl;
    if (p.ttl < 0) continue;
    for (int j = 0; j < ship_count(); ++j) {
      if (team_of(j) == p.team || !ships_[j].alive()) continue;
      const double dx = torus_delta(p.x, ships_[j].x);
      const double dy = torus_delta(p.y, ships_[j].y);
      if (dx * dx + dy * dy <= radius2) {
        ships_[j].health =
            std::max(0.0, ships_[j].health - params_.projectile_damage);
        rewards[p.owner] += params_.reward_projectile_hit;
        rewards[j] += params_.reward_hit_received;
        p.ttl = -1;  // spent
        break;
      }
    }
  }
  std::erase_if(projectiles_, [](const Projectile& p) { return p.ttl < 0; });
}

void SpaceBattleWorld::resolve_ramming(std::span<double> rewards) {
  const double radius2 = params_.ram_radius * params_.ram_radius;
  std::vector<double> damage(ship_count(), 0.0);
  for (int i = 0; i < ship_count(); ++i) {
    if (!ships_[i].alive()) continue;
    for (int j = i + 1; j < ship_count(); ++j) {
      if (!ships_[j].alive() || team_of(i) == team_of(j)) continue;
      const double dx = torus_delta(ships_[i].x, ships_[j].x);
      const double dy = torus_delta(ships_[i].y, ships_[j].y);
      if (dx * dx + dy * dy <= radius2) {
        damage[i] += params_.ram_damage;
        damage[j] += params_.ram_damage;
        rewards[i] += params_.reward_ram_hit + params_.reward_hit_received;
        rewards[j] += params_.reward_ram_hit + params_.reward_hit_received;
      }
    }
  }
  for (int i = 0; i < ship_count(); ++i)
    ships_[i].health = std::max(0.0, ships_[i].health - damage[i]);
}

void SpaceBattleWorld::step(std::span<const int> actions,
                            std::span<double> rewards_out) {
  require(!done_, "space battle: step on a finished episode");
  require(static_cast<int>(actions.size()) == ship_count(),
          "space battle: need one action per ship");
  require(static_cast<int>(rewards_out.size()) == ship_count(),
          "space battle: rewards_out size mismatch");
  std::fill(rewards_out.begin(), rewards_out.end(), 0.0);

  for (int i = 0; i < ship_count(); ++i)
    if (ships_[i].alive()) apply_action(i, actions[i]);

  move_projectiles(rewards_out);
  resolve_ramming(rewards_out);
  ++steps_;

  const bool team0 = team_alive(0);
  const bool team1 = team_alive(1);
  if (!team0 || !team1) {
    if (team0 != team1) {
      const int winner = team0 ? 0 : 1;
      for (int i = 0; i < ship_count(); ++i)
        if (team_of(i) == winner)
          rewards_out[i] += params_.reward_team_elimination;
    }
    done_ = true;
  } else if (steps_ >= params_.max_steps) {
    done_ = true;
  }
}

bool SpaceBattleWorld::team_alive(int team) const {
  for (int i = 0; i < ship_count(); ++i)
    if (team_of(i) == team && ships_[i].alive()) return true;
  return false;
}

int SpaceBattleWorld::observation_dim() const {
  return 6 + 3 * (ship_count() - 1);
}

std::vector<double> SpaceBattleWorld::observation(int ship) const {
  std::vector<double> obs(observation_dim(), 0.0);
  const ShipState& self = ships_[ship];
  if (!self.alive()) return obs;  // zero vector doubles as the dead flag

  const double w = params_.world_size;
  const double half = 0.5 * w;
  obs[0] = 2.0 * self.x / w - 1.0;
  obs[1] = 2.0 * self.y / w - 1.0;
  obs[2] = self.theta / std::numbers::pi;
  obs[3] = static_cast<double>(self.missiles) / params_.initial_missiles;
  obs[4] = self.fuel / params_.initial_fuel;
  obs[5] = self.health / params_.initial_health;

  // Teammates first, then enemies, both in index order.
  const double cos_t = std::cos(-self.theta);
  const double sin_t = std::sin(-self.theta);
  int slot = 0;
  auto emit = [&](int other) {
    double* o = obs.data() + 6 + 3 * slot++;
    const ShipState& s = ships_[other];
    if (!s.alive()) return;  // slot stays zero
    const double dx = torus_delta(self.x, s.x);
    const double dy = torus_delta(self.y, s.y);
    o[0] = (cos_t * dx - sin_t * dy) / half;
    o[1] = (sin_t * dx + cos_t * dy) / half;
    o[2] = wrap_angle(s.theta - self.theta) / std::numbers::pi;
  };
  for (int j = 0; j < ship_count(); ++j)
    if (j != ship && team_of(j) == team_of(ship)) emit(j);
  for (int j = 0; j < ship_count(); ++j)
    if (team_of(j) != team_of(ship)) emit(j);
  return obs;
}

int scripted_patrol_action(const SpaceBattleWorld& world, int ship_idx) {
  const int phase = world.step_count() + 11 * ship_idx;
  if (phase % 7 == 3 && world.ship(ship_idx).missiles > 0)
    return SpaceBattleWorld::kFire;
  if (phase % 23 < 4) return SpaceBattleWorld::kTurnCcw;
  return SpaceBattleWorld::kMove;
}

}  // namespace ltcr
