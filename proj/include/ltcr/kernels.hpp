#pragma once

#include <span>
#include <vector>

#include "ltcr/distribution.hpp"
#include "ltcr/network.hpp"
#include "ltcr/replay.hpp"

namespace ltcr {

// Batch gradient kernels for the two losses. Each has an OpenMP version and
// a plain serial reference (_ref) used by the tests and the benchmark.
//
// The batch is split into kGradChunks fixed chunks; each chunk accumulates
// its elements' gradients in element order into its own buffer, and the
// chunk buffers are combined in chunk order. The chunk structure is a
// compile-time constant, not derived from the thread count, so the parallel
// result is bit-identical to the reference on any machine.

inline constexpr int kGradChunks = 4;

/// One distillation example: match the student's head at (state, action) to
/// a fixed target distribution.
struct DistillItem {
  std::span<const double> state;
  int action = 0;
  std::span<const double> target;
};

/// Per-chunk scratch reused across steps to keep the hot loop free of
/// allocation.
struct BatchWorkspace {
  struct Chunk {
    ForwardTrace online;
    ForwardTrace target;
    GradBuffer acc;
    BackwardScratch scratch;
    std::vector<double> projected;
    std::vector<double> grad_probs;
    double loss_sum = 0.0;
  };
  std::vector<Chunk> chunks;

  void ensure(const Mlp& net, int atom_count);
};

/// C51 update: for each transition pick a* with the frozen target network,
/// project the shifted distribution onto the grid and backprop
/// KL(projected || online) through the online head at (state, action).
/// `mean_grad` receives the batch-mean gradient; the batch-mean KL is
/// returned.
double c51_batch_gradients(const Mlp& online, const Mlp& target,
                           const SupportGrid& grid, double discount,
                           const ReplayBuffer& replay,
                           std::span<const std::size_t> batch,
                           BatchWorkspace& ws, GradBuffer& mean_grad);

double c51_batch_gradients_ref(const Mlp& online, const Mlp& target,
                               const SupportGrid& grid, double discount,
                               const ReplayBuffer& replay,
                               std::span<const std::size_t> batch,
                               BatchWorkspace& ws, GradBuffer& mean_grad);

/// Distillation update: mean over items of KL(target || student head).
double distill_batch_gradients(const Mlp& student,
                               std::span<const DistillItem> items,
                               BatchWorkspace& ws, GradBuffer& mean_grad);

double distill_batch_gradients_ref(const Mlp& student,
                                   std::span<const DistillItem> items,
                                   BatchWorkspace& ws, GradBuffer& mean_grad);

/// d KL(p || q) / d q with the same floor the loss uses.
void kl_grad_wrt_q(std::span<const double> p, std::span<const double> q,
                   std::vector<double>& out);

}  // namespace ltcr
