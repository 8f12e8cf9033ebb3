#pragma once

#include "ltcr/env.hpp"

namespace ltcr {

struct CartPoleParams {
  double gravity = 9.8;
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double pole_half_length = 0.5;
  double force_magnitude = 10.0;
  double time_step = 0.02;
  double angle_limit_degrees = 15.0;
  double position_limit = 2.4;
  int max_steps = 200;
};

/// Pole-on-cart balancing task. Observation is (cart position, cart
/// velocity, pole angle, pole angular velocity); actions push the cart left
/// (0) or right (1). Reward is +1 for every step the pole stays within the
/// angle/position limits; the episode ends on a violation or after
/// max_steps.
class CartPoleEnv final : public Env {
 public:
  explicit CartPoleEnv(const CartPoleParams& params = {});

  int observation_dim() const override { return 4; }
  int action_count() const override { return 2; }
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  std::unique_ptr<Env> clone_fresh() const override;

  /// Direct state override, used by tests probing the terminal thresholds.
  void set_state(double x, double x_dot, double theta, double theta_dot);
  int steps_taken() const { return steps_; }
  bool terminal() const { return terminal_; }

 private:
  std::vector<double> observation() const;
  bool violated() const;

  CartPoleParams params_;
  double x_ = 0.0, x_dot_ = 0.0, theta_ = 0.0, theta_dot_ = 0.0;
  int steps_ = 0;
  bool terminal_ = true;  // must reset before stepping
};

}  // namespace ltcr
