#include "ltcr/agent.hpp"

#include "ltcr/errors.hpp"

namespace ltcr {

namespace {
constexpr std::uint64_t kInitStream = 0x01;
constexpr std::uint64_t kActStream = 0x02;
constexpr std::uint64_t kEvalStream = 0x03;
constexpr std::uint64_t kReplayStream = 0x04;
}  // namespace

CategoricalAgent::CategoricalAgent(int id, const AgentConfig& config,
                                   std::uint64_t master_seed)
    : id_(id),
      config_(config),
      grid_(make_support(config.v_min, config.v_max, config.shape.atom_count)),
      net_(config.shape, Rng::mix(master_seed, id, kInitStream)),
      target_(net_),
      optimizer_(net_, config.adam),
      replay_(config.replay_capacity),
      act_rng_(Rng::mix(master_seed, id, kActStream)),
      eval_rng_(Rng::mix(master_seed, id, kEvalStream)),
      replay_rng_(Rng::mix(master_seed, id, kReplayStream)) {
  require_config(config.discount >= 0.0 && config.discount <= 1.0,
                 "agent: discount must be in [0, 1]");
  require_config(config.batch_size >= 1, "agent: batch_size must be >= 1");
}

int CategoricalAgent::act(std::span<const double> state, bool evaluation) {
  Rng& rng = evaluation ? eval_rng_ : act_rng_;
  const double eps = evaluation ? config_.epsilon.evaluation : epsilon_now();
  if (rng.uniform() < eps) return rng.uniform_int(config_.shape.action_count);

  forward(net_, state, act_trace_);
  return greedy_action(grid_, act_trace_.probs.data(), config_.shape.action_count);
}

void CategoricalAgent::observe(Transition t) {
  replay_.push(std::move(t));
  ++frames_;
}

bool CategoricalAgent::ready_to_train() const {
  return frames_ >= config_.warmup_frames &&
         replay_.size() >= static_cast<std::size_t>(config_.batch_size);
}

double CategoricalAgent::train_step() {
  require(replay_.size() >= static_cast<std::size_t>(config_.batch_size),
          "train_step: not enough replay");
  replay_.sample(config_.batch_size, replay_rng_, batch_indices_);
  if (mean_grad_.gw.empty()) mean_grad_.resize_like(net_);
  const double loss =
      c51_batch_gradients(net_, target_, grid_, config_.discount, replay_,
                          batch_indices_, workspace_, mean_grad_);
  optimizer_.step(net_, mean_grad_);
  ++c51_steps_;
  maybe_sync_target();
  return loss;
}

double CategoricalAgent::distill_step(std::span<const DistillItem> items) {
  if (mean_grad_.gw.empty()) mean_grad_.resize_like(net_);
  const double loss =
      distill_batch_gradients(net_, items, workspace_, mean_grad_);
  optimizer_.step(net_, mean_grad_);
  ++distill_steps_;
  maybe_sync_target();
  return loss;
}

double CategoricalAgent::head_kl(std::span<const double> state, int action,
                                 std::span<const double> target_probs) const {
  ForwardTrace trace;
  forward(net_, state, trace);
  return kl_divergence(target_probs, trace.action_probs(net_, action));
}

void CategoricalAgent::maybe_sync_target() {
  // Both losses count towards the sync cadence: one optimizer step is one
  // unit of training regardless of which loss produced it.
  const long updates = c51_steps_ + distill_steps_;
  if (config_.target_sync_steps > 0 && updates % config_.target_sync_steps == 0)
    target_ = net_;
}

double evaluate(CategoricalAgent& agent, Env& env, int episodes,
                std::uint64_t seed) {
  require(episodes >= 1, "evaluate: need at least one episode");
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    std::vector<double> obs = env.reset(Rng::mix(seed, e));
    bool done = false;
    double ret = 0.0;
    while (!done) {
      const int action = agent.act(obs, /*evaluation=*/true);
      StepResult r = env.step(action);
      ret += r.reward;
      done = r.terminal;
      obs = std::move(r.observation);
    }
    total += ret;
  }
  return total / episodes;
}

}  // namespace ltcr
