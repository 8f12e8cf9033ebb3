#pragma once

#include <cstddef>
#include <vector>

#include "ltcr/rng.hpp"

namespace ltcr {

struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;
};

/// Bounded ring of transitions with seeded uniform sampling. Oldest entries
/// are overwritten once the capacity is reached.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    data_.reserve(capacity);
  }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return data_[i]; }

  /// Uniform sample with replacement; indices into the underlying store.
  void sample(int batch, Rng& rng, std::vector<std::size_t>& out) const {
    out.resize(batch);
    for (int i = 0; i < batch; ++i)
      out[i] = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(data_.size())));
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::vector<Transition> data_;
};

}  // namespace ltcr
