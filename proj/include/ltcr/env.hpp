#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace ltcr {

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool terminal = false;
};

/// Single-agent episodic environment. Deterministic function of
/// (seed, action sequence). Stepping past a terminal state is a contract
/// violation; call reset first.
class Env {
 public:
  virtual ~Env() = default;
  virtual int observation_dim() const = 0;
  virtual int action_count() const = 0;
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual StepResult step(int action) = 0;
  virtual std::unique_ptr<Env> clone_fresh() const = 0;
};

}  // namespace ltcr
