#include "ltcr/protocol.hpp"

#include <mutex>

#include "ltcr/errors.hpp"

namespace ltcr {

std::vector<double> soft_target(
    std::span<const std::vector<double>* const> teacher_probs) {
  require(!teacher_probs.empty(), "soft_target: no demonstrations");
  const std::size_t K = teacher_probs.front()->size();
  std::vector<double> out(K, 0.0);
  for (const std::vector<double>* p : teacher_probs) {
    require(p->size() == K, "soft_target: atom count mismatch");
    for (std::size_t k = 0; k < K; ++k) out[k] += (*p)[k];
  }
  const double inv = 1.0 / static_cast<double>(teacher_probs.size());
  for (double& v : out) v *= inv;
  return out;
}

std::vector<double> soft_target(const std::vector<std::vector<double>>& probs) {
  std::vector<const std::vector<double>*> ptrs;
  ptrs.reserve(probs.size());
  for (const auto& p : probs) ptrs.push_back(&p);
  return soft_target(std::span<const std::vector<double>* const>(ptrs));
}

SharedMemory::SharedMemory(std::size_t capacity) : capacity_(capacity) {
  require_config(capacity >= 1, "shared memory: capacity must be >= 1");
}

void SharedMemory::add_features(std::uint16_t owner,
                                std::span<const FeatureVector> features) {
  std::unique_lock lock(mutex_);
  for (const FeatureVector& f : features) {
    if (features_.size() >= capacity_) {
      features_.pop_front();
      ++evictions_;
    }
    features_.push_back({next_feature_id_++, owner, f});
  }
}

std::size_t SharedMemory::feature_count() const {
  std::shared_lock lock(mutex_);
  return features_.size();
}

SharedMemory::StoredFeature SharedMemory::feature_at(std::size_t index) const {
  std::shared_lock lock(mutex_);
  require(index < features_.size(), "shared memory: feature index out of range");
  return features_[index];
}

std::uint64_t SharedMemory::evictions() const {
  std::shared_lock lock(mutex_);
  return evictions_;
}

void SharedMemory::stage(Demonstration demo) {
  std::unique_lock lock(mutex_);
  staged_.push_back(std::move(demo));
}

std::size_t SharedMemory::staged_count() const {
  std::shared_lock lock(mutex_);
  return staged_.size();
}

void SharedMemory::commit_round() {
  std::unique_lock lock(mutex_);
  previous_committed_ = std::move(committed_);
  committed_ = std::move(staged_);
  staged_.clear();
  ++rounds_;
}

void SharedMemory::abort_round() {
  std::unique_lock lock(mutex_);
  staged_.clear();
}

void SharedMemory::rollback_round() {
  std::unique_lock lock(mutex_);
  require(rounds_ > 0, "shared memory: no round to roll back");
  committed_ = std::move(previous_committed_);
  previous_committed_.clear();
  --rounds_;
}

std::uint32_t SharedMemory::committed_rounds() const {
  std::shared_lock lock(mutex_);
  return rounds_;
}

std::vector<Demonstration> SharedMemory::current_round() const {
  std::shared_lock lock(mutex_);
  return committed_;
}

PhaseSchedule PhaseSchedule::preset(const std::string& name) {
  PhaseSchedule s;
  s.name = name;
  if (name == "baseline") {
    s.revisit_steps = 1000;
    s.digest_steps = 0;
  } else if (name == "9-1") {
    s.revisit_steps = 900;
    s.digest_steps = 100;
  } else if (name == "7-3") {
    s.revisit_steps = 700;
    s.digest_steps = 300;
  } else if (name == "5-5") {
    s.revisit_steps = 500;
    s.digest_steps = 500;
  } else {
    throw ConfigError("unknown schedule preset: " + name);
  }
  return s;
}

}  // namespace ltcr
