#pragma once

#include <cstdint>
#include <deque>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

namespace ltcr {

/// A (state, action) pair — the index a demonstration is defined at.
struct FeatureVector {
  std::vector<double> state;
  int action = 0;

  bool operator==(const FeatureVector&) const = default;
};

/// A teacher's categorical prediction at one feature, published during the
/// Communicate phase.
struct Demonstration {
  std::uint32_t round = 0;
  std::uint16_t teacher_id = 0;
  FeatureVector feature;
  std::vector<double> probs;
  /// Identity of the feature inside the shared store; used to group
  /// demonstrations from different teachers at the same feature.
  std::uint32_t feature_id = 0;
};

/// Element-wise average of several teachers' distributions at one feature.
std::vector<double> soft_target(
    std::span<const std::vector<double>* const> teacher_probs);
std::vector<double> soft_target(const std::vector<std::vector<double>>& probs);

/// The shared store every agent uploads features to and publishes
/// demonstrations through. Feature uploads are append-only with FIFO
/// eviction at the capacity bound. Demonstration rounds are staged and then
/// committed atomically: readers see a whole round or none of it. Safe for
/// concurrent readers with exclusive committing writers.
class SharedMemory {
 public:
  struct StoredFeature {
    std::uint32_t id = 0;
    std::uint16_t owner = 0;
    FeatureVector feature;
  };

  explicit SharedMemory(std::size_t capacity);

  void add_features(std::uint16_t owner, std::span<const FeatureVector> features);
  std::size_t feature_count() const;
  StoredFeature feature_at(std::size_t index) const;
  std::uint64_t evictions() const;

  void stage(Demonstration demo);
  std::size_t staged_count() const;
  /// Publishes everything staged since the last commit as one round.
  void commit_round();
  /// Drops the staged set; the committed round is untouched.
  void abort_round();
  /// Undoes the most recent commit, restoring the round before it. Used when
  /// an agent fails mid-round so the round is never observed as committed.
  void rollback_round();

  /// Number of committed rounds so far; the latest round has index
  /// committed_rounds() - 1.
  std::uint32_t committed_rounds() const;
  /// Snapshot of the most recently committed round.
  std::vector<Demonstration> current_round() const;

 private:
  mutable std::shared_mutex mutex_;
  std::size_t capacity_;
  std::deque<StoredFeature> features_;
  std::uint32_t next_feature_id_ = 0;
  std::uint64_t evictions_ = 0;
  std::vector<Demonstration> staged_;
  std::vector<Demonstration> committed_;
  std::vector<Demonstration> previous_committed_;
  std::uint32_t rounds_ = 0;
};

/// Revisit/Digest step budget per communication round. The named presets
/// split the same total step budget so every schedule performs one gradient
/// step per explored frame on average.
struct PhaseSchedule {
  std::string name = "baseline";
  int revisit_steps = 1000;
  int digest_steps = 0;
  long frames_per_round = 1000;

  /// "baseline", "9-1", "7-3" or "5-5".
  static PhaseSchedule preset(const std::string& name);
};

}  // namespace ltcr
