#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ltcr/cartpole.hpp"
#include "ltcr/errors.hpp"
#include "ltcr/rng.hpp"
#include "ltcr/space_battle.hpp"
#include "ltcr/team_env.hpp"

using namespace ltcr;

TEST_CASE("cartpole: push right accelerates the cart to the right") {
  CartPoleEnv env;
  env.reset(1);
  env.set_state(0.0, 0.0, 0.0, 0.0);
  const StepResult r = env.step(1);
  CHECK(r.observation[1] > 0.0);

  CartPoleEnv env2;
  env2.reset(1);
  env2.set_state(0.0, 0.0, 0.0, 0.0);
  const StepResult l = env2.step(0);
  CHECK(l.observation[1] < 0.0);
}

TEST_CASE("cartpole: terminal thresholds") {
  CartPoleEnv env;
  env.reset(3);
  env.set_state(0.0, 0.0, 16.0 * std::numbers::pi / 180.0, 0.0);
  CHECK(env.terminal());
  CHECK_THROWS_AS(env.step(0), ContractViolation);

  // An angle just inside the limit that swings past it in one step.
  CartPoleEnv env2;
  env2.reset(3);
  env2.set_state(0.0, 0.0, 14.9 * std::numbers::pi / 180.0, 3.0);
  CHECK_FALSE(env2.terminal());
  const StepResult r = env2.step(1);
  CHECK(r.terminal);
  CHECK(r.reward == 0.0);

  CartPoleEnv env3;
  env3.reset(3);
  env3.set_state(2.39, 5.0, 0.0, 0.0);
  const StepResult p = env3.step(1);
  CHECK(p.terminal);
}

TEST_CASE("cartpole: determinism and return bounds") {
  auto rollout = [](std::uint64_t seed, std::uint64_t policy_seed) {
    CartPoleEnv env;
    env.reset(seed);
    Rng rng(policy_seed);
    double ret = 0.0;
    bool done = false;
    std::vector<double> trace;
    while (!done) {
      const StepResult r = env.step(rng.uniform_int(2));
      ret += r.reward;
      done = r.terminal;
      trace.push_back(r.observation[0]);
    }
    return std::pair{ret, trace};
  };
  const auto [ret1, trace1] = rollout(42, 7);
  const auto [ret2, trace2] = rollout(42, 7);
  CHECK(ret1 == ret2);
  CHECK(trace1 == trace2);

  // Random policies fall quickly; any policy stays within [1, 200].
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto [ret, trace] = rollout(s, s + 100);
    CHECK(ret >= 1.0);
    CHECK(ret <= 200.0);
    worst = std::max(worst, ret);
  }
  CHECK(worst < 150.0);  // far from the cap under random control
}

TEST_CASE("cartpole: a hand-tuned balance controller reaches the cap") {
  CartPoleEnv env;
  std::vector<double> obs = env.reset(5);
  double ret = 0.0;
  bool done = false;
  while (!done) {
    const double u = 0.7 * obs[0] + 1.2 * obs[1] + 14.0 * obs[2] + 2.2 * obs[3];
    const StepResult r = env.step(u > 0.0 ? 1 : 0);
    ret += r.reward;
    obs = r.observation;
    done = r.terminal;
  }
  CHECK(ret == 200.0);
}

TEST_CASE("space battle: inverse turns restore the heading") {
  SpaceBattleWorld world(SpaceBattleParams{.team_size = 1});
  world.reset(9);
  const double theta0 = world.ship(0).theta;
  std::vector<int> actions{SpaceBattleWorld::kTurnCcw, SpaceBattleWorld::kTurnCcw};
  std::vector<double> rewards(2);
  world.step(actions, rewards);
  actions[0] = SpaceBattleWorld::kTurnCw;
  world.step(actions, rewards);
  CHECK(world.ship(0).theta == doctest::Approx(theta0).epsilon(1e-12));
}

TEST_CASE("space battle: firing with no missiles is a no-op") {
  SpaceBattleWorld world(SpaceBattleParams{.team_size = 1});
  world.reset(4);
  world.mutable_ship(0).missiles = 0;
  std::vector<int> actions{SpaceBattleWorld::kFire, SpaceBattleWorld::kTurnCcw};
  std::vector<double> rewards(2);
  world.step(actions, rewards);
  CHECK(world.projectiles().empty());
  CHECK(rewards[0] == 0.0);
}

TEST_CASE("space battle: projectile hits a stationary target straight ahead") {
  SpaceBattleParams params{.team_size = 1};
  SpaceBattleWorld world(params);
  world.reset(10);
  world.mutable_ship(0) = {10.0, 50.0, 0.0, 5, 100.0, 100.0};
  world.mutable_ship(1) = {20.0, 50.0, std::numbers::pi / 2.0, 5, 100.0, 100.0};

  std::vector<int> actions{SpaceBattleWorld::kFire, SpaceBattleWorld::kTurnCcw};
  std::vector<double> rewards(2);
  double shooter_total = 0.0;
  bool hit = false;
  for (int step = 0; step < params.projectile_lifetime && !hit; ++step) {
    world.step(actions, rewards);
    actions[0] = SpaceBattleWorld::kTurnCcw;  // fire once, then idle
    shooter_total += rewards[0];
    if (world.ship(1).health < params.initial_health) hit = true;
  }
  CHECK(hit);
  CHECK(shooter_total == doctest::Approx(params.reward_projectile_hit));
  CHECK(world.ship(1).health ==
        doctest::Approx(params.initial_health - params.projectile_damage));
}

TEST_CASE("space battle: health and missiles never increase") {
  SpaceBattleWorld world(SpaceBattleParams{.team_size = 2, .max_steps = 400});
  world.reset(77);
  Rng rng(5);
  std::vector<int> actions(4);
  std::vector<double> rewards(4);
  double prev_health = 4 * 100.0;
  int prev_missiles = 4 * 50;
  while (!world.done()) {
    for (int& a : actions) a = rng.uniform_int(SpaceBattleWorld::kActionCount);
    world.step(actions, rewards);
    double health = 0.0;
    int missiles = 0;
    for (int i = 0; i < 4; ++i) {
      health += world.ship(i).health;
      missiles += world.ship(i).missiles;
    }
    CHECK(health <= prev_health);
    CHECK(missiles <= prev_missiles);
    prev_health = health;
    prev_missiles = missiles;
  }
}

TEST_CASE("space battle: elimination grants the team bonus and ends the episode") {
  SpaceBattleParams params{.team_size = 1};
  SpaceBattleWorld world(params);
  world.reset(3);
  world.mutable_ship(0) = {10.0, 50.0, 0.0, 5, 100.0, 100.0};
  world.mutable_ship(1) = {13.0, 50.0, 0.0, 5, 100.0, params.projectile_damage};

  std::vector<int> actions{SpaceBattleWorld::kFire, SpaceBattleWorld::kTurnCcw};
  std::vector<double> rewards(2);
  world.step(actions, rewards);  // projectile travels 3 units onto the target
  CHECK(world.done());
  CHECK_FALSE(world.team_alive(1));
  CHECK(rewards[0] == doctest::Approx(params.reward_projectile_hit +
                                      params.reward_team_elimination));
}

TEST_CASE("space battle: observations") {
  SpaceBattleParams params{.team_size = 2};
  SpaceBattleWorld a(params), b(params);
  a.reset(123);
  b.reset(123);
  for (int i = 0; i < 4; ++i) CHECK(a.observation(i) == b.observation(i));

  SUBCASE("dead ships observe and are observed as zeros") {
    a.mutable_ship(1).health = 0.0;
    const auto dead = a.observation(1);
    for (double v : dead) CHECK(v == 0.0);
    const auto alive = a.observation(0);
    // Teammate block (first "other" slot) is zeroed.
    CHECK(alive[6] == 0.0);
    CHECK(alive[7] == 0.0);
    CHECK(alive[8] == 0.0);
  }

  SUBCASE("relative geometry is invariant under a global rotation") {
    // Cluster the ships near the world centre so the rotation never wraps.
    const double cx = 50.0, cy = 50.0;
    const double phi = 0.7;
    std::vector<ShipState> base = {{48.0, 50.5, 0.3, 5, 100, 100},
                                   {52.5, 49.0, -1.2, 5, 100, 100},
                                   {50.0, 53.0, 2.1, 5, 100, 100},
                                   {47.5, 47.0, 0.0, 5, 100, 100}};
    for (int i = 0; i < 4; ++i) a.mutable_ship(i) = base[i];
    for (int i = 0; i < 4; ++i) {
      const double dx = base[i].x - cx;
      const double dy = base[i].y - cy;
      ShipState rotated = base[i];
      rotated.x = cx + std::cos(phi) * dx - std::sin(phi) * dy;
      rotated.y = cy + std::sin(phi) * dx + std::cos(phi) * dy;
      rotated.theta = rotated.theta + phi;
      b.mutable_ship(i) = rotated;
    }
    for (int i = 0; i < 4; ++i) {
      const auto oa = a.observation(i);
      const auto ob = b.observation(i);
      for (std::size_t k = 6; k < oa.size(); ++k)
        CHECK(oa[k] == doctest::Approx(ob[k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("independent team env auto-resets finished episodes") {
  CartPoleEnv prototype;
  IndependentTeamEnv team(prototype, 2);
  team.reset(11);
  Rng rng(1);
  std::vector<int> actions(2);
  std::vector<TeamStepResult> results;
  int terminals = 0;
  for (int f = 0; f < 500; ++f) {
    CHECK(team.active(0));
    CHECK(team.active(1));
    actions[0] = rng.uniform_int(2);
    actions[1] = rng.uniform_int(2);
    team.step(actions, results);
    for (const auto& r : results)
      if (r.terminal) {
        ++terminals;
        CHECK_FALSE(r.terminal_obs.empty());
      }
  }
  CHECK(terminals > 2);  // random play ends episodes well before 500 frames
  CHECK_FALSE(team.all_done());
}

TEST_CASE("team env evaluation mode freezes finished members") {
  CartPoleEnv prototype;
  IndependentTeamEnv team(prototype, 2);
  team.set_auto_reset(false);
  team.reset(13);
  std::vector<int> actions{0, 0};
  std::vector<TeamStepResult> results;
  int guard = 0;
  while (!team.all_done() && guard++ < 1000) team.step(actions, results);
  CHECK(team.all_done());
  CHECK_FALSE(team.active(0));
  CHECK_FALSE(team.active(1));
}

TEST_CASE("space battle team env: scripted opponents and episode flow") {
  SpaceBattleTeamConfig config;
  config.world.team_size = 2;
  config.world.max_steps = 50;
  SpaceBattleTeamEnv team(config);
  team.reset(21);
  CHECK(team.observation_dim() == 6 + 3 * 3);
  CHECK(team.action_count() == 4);

  std::vector<int> actions{SpaceBattleWorld::kMove, SpaceBattleWorld::kMove};
  std::vector<TeamStepResult> results;
  for (int f = 0; f < 120; ++f) team.step(actions, results);
  // Auto-reset rolled through at least two episode caps.
  CHECK(team.world().step_count() <= 50);
}
