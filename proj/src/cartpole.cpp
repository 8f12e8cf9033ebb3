#include "ltcr/cartpole.hpp"

#include <cmath>
#include <numbers>

#include "ltcr/errors.hpp"
#include "ltcr/rng.hpp"

namespace ltcr {

CartPoleEnv::CartPoleEnv(const CartPoleParams& params) : params_(params) {}

std::vector<double> CartPoleEnv::reset(std::uint64_t seed) {
  Rng rng(seed);
  x_ = rng.uniform(-0.05, 0.05);
  x_dot_ = rng.uniform(-0.05, 0.05);
  theta_ = rng.uniform(-0.05, 0.05);
  theta_dot_ = rng.uniform(-0.05, 0.05);
  steps_ = 0;
  terminal_ = false;
  return observation();
}

StepResult CartPoleEnv::step(int action) {
  require(!terminal_, "cartpole: step on a terminal episode");
  require(action == 0 || action == 1, "cartpole: invalid action");

  const double force = action == 1 ? params_.force_magnitude : -params_.force_magnitude;
  const double total_mass = params_.cart_mass + params_.pole_mass;
  const double polemass_length = params_.pole_mass * params_.pole_half_length;
  const double cos_t = std::cos(theta_);
  const double sin_t = std::sin(theta_);

  const double temp =
      (force + polemass_length * theta_dot_ * theta_dot_ * sin_t) / total_mass;
  const double theta_acc =
      (params_.gravity * sin_t - cos_t * temp) /
      (params_.pole_half_length *
       (4.0 / 3.0 - params_.pole_mass * cos_t * cos_t / total_mass));
  const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;

  const double tau = params_.time_step;
  x_ += tau * x_dot_;
  x_dot_ += tau * x_acc;
  theta_ += tau * theta_dot_;
  theta_dot_ += tau * theta_acc;
  ++steps_;

  StepResult result;
  const bool fell = violated();
  result.reward = fell ? 0.0 : 1.0;
  result.terminal = fell || steps_ >= params_.max_steps;
  result.observation = observation();
  terminal_ = result.terminal;
  return result;
}

std::unique_ptr<Env> CartPoleEnv::clone_fresh() const {
  return std::make_unique<CartPoleEnv>(params_);
}

void CartPoleEnv::set_state(double x, double x_dot, double theta,
                            double theta_dot) {
  x_ = x;
  x_dot_ = x_dot;
  theta_ = theta;
  theta_dot_ = theta_dot;
  terminal_ = violated();
}

std::vector<double> CartPoleEnv::observation() const {
  return {x_, x_dot_, theta_, theta_dot_};
}

bool CartPoleEnv::violated() const {
  const double angle_limit =
      params_.angle_limit_degrees * std::numbers::pi / 180.0;
  return std::abs(theta_) > angle_limit || std::abs(x_) > params_.position_limit;
}

}  // namespace ltcr
