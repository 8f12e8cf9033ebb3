#include "ltcr/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "ltcr/errors.hpp"

namespace ltcr {

void BatchWorkspace::ensure(const Mlp& net, int atom_count) {
  if (static_cast<int>(chunks.size()) < kGradChunks) chunks.resize(kGradChunks);
  for (Chunk& c : chunks) {
    c.online.ensure(net);
    c.target.ensure(net);
    if (c.acc.gw.size() != static_cast<std::size_t>(net.layer_count()))
      c.acc.resize_like(net);
    c.projected.resize(atom_count);
    c.grad_probs.resize(atom_count);
  }
}

void kl_grad_wrt_q(std::span<const double> p, std::span<const double> q,
                   std::vector<double>& out) {
  out.resize(p.size());
  for (std::size_t k = 0; k < p.size(); ++k)
    out[k] = -p[k] / std::max(q[k], kKlFloor);
}

namespace {

// Accumulates one transition's gradient into the chunk buffer and returns
// its KL loss.
double c51_element(const Mlp& online, const Mlp& target, const SupportGrid& grid,
                   double discount, const Transition& tr,
                   BatchWorkspace::Chunk& c) {
  const int K = grid.atom_count;
  if (tr.terminal) {
    project_into(grid, tr.reward, discount, nullptr, /*terminal=*/true,
                 c.projected.data());
  } else {
    forward(target, tr.next_state, c.target);
    const int a_star = greedy_action(grid, c.target.probs.data(),
                                     target.shape().action_count);
    project_into(grid, tr.reward, discount,
                 c.target.probs.data() + static_cast<std::size_t>(a_star) * K,
                 /*terminal=*/false, c.projected.data());
  }

  forward(online, tr.state, c.online);
  const double* q = c.online.probs.data() + static_cast<std::size_t>(tr.action) * K;
  const double loss = kl_divergence(c.projected, {q, static_cast<std::size_t>(K)});

  for (int k = 0; k < K; ++k)
    c.grad_probs[k] = -c.projected[k] / std::max(q[k], kKlFloor);
  backward_from_probs(online, c.online, tr.action, c.grad_probs, c.acc, c.scratch);
  return loss;
}

double distill_element(const Mlp& student, const DistillItem& item,
                       BatchWorkspace::Chunk& c) {
  const int K = student.shape().atom_count;
  forward(student, item.state, c.online);
  const double* q = c.online.probs.data() + static_cast<std::size_t>(item.action) * K;
  const double loss = kl_divergence(item.target, {q, static_cast<std::size_t>(K)});
  for (int k = 0; k < K; ++k)
    c.grad_probs[k] = -item.target[k] / std::max(q[k], kKlFloor);
  backward_from_probs(student, c.online, item.action, c.grad_probs, c.acc,
                      c.scratch);
  return loss;
}

// Combines chunk accumulators in chunk order.
double combine(BatchWorkspace& ws, int n, GradBuffer& mean_grad) {
  mean_grad.zero();
  const double inv = 1.0 / n;
  double loss = 0.0;
  for (int c = 0; c < kGradChunks; ++c) {
    mean_grad.add_scaled(ws.chunks[c].acc, inv);
    loss += ws.chunks[c].loss_sum;
  }
  return loss * inv;
}

inline int chunk_begin(int chunk, int n) {
  const int per = (n + kGradChunks - 1) / kGradChunks;
  return std::min(n, chunk * per);
}

}  // namespace

double c51_batch_gradients(const Mlp& online, const Mlp& target,
                           const SupportGrid& grid, double discount,
                           const ReplayBuffer& replay,
                           std::span<const std::size_t> batch,
                           BatchWorkspace& ws, GradBuffer& mean_grad) {
  require(!batch.empty(), "c51 kernel: empty batch");
  const int n = static_cast<int>(batch.size());
  ws.ensure(online, grid.atom_count);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < kGradChunks; ++c) {
    BatchWorkspace::Chunk& chunk = ws.chunks[c];
    chunk.acc.zero();
    chunk.loss_sum = 0.0;
    for (int i = chunk_begin(c, n); i < chunk_begin(c + 1, n); ++i)
      chunk.loss_sum +=
          c51_element(online, target, grid, discount, replay.at(batch[i]), chunk);
  }
  return combine(ws, n, mean_grad);
}

double c51_batch_gradients_ref(const Mlp& online, const Mlp& target,
                               const SupportGrid& grid, double discount,
                               const ReplayBuffer& replay,
                               std::span<const std::size_t> batch,
                               BatchWorkspace& ws, GradBuffer& mean_grad) {
  require(!batch.empty(), "c51 kernel: empty batch");
  const int n = static_cast<int>(batch.size());
  ws.ensure(online, grid.atom_count);
  for (int c = 0; c < kGradChunks; ++c) {
    BatchWorkspace::Chunk& chunk = ws.chunks[c];
    chunk.acc.zero();
    chunk.loss_sum = 0.0;
    for (int i = chunk_begin(c, n); i < chunk_begin(c + 1, n); ++i)
      chunk.loss_sum +=
          c51_element(online, target, grid, discount, replay.at(batch[i]), chunk);
  }
  return combine(ws, n, mean_grad);
}

double distill_batch_gradients(const Mlp& student,
                               std::span<const DistillItem> items,
                               BatchWorkspace& ws, GradBuffer& mean_grad) {
  require(!items.empty(), "distill kernel: empty item set");
  const int n = static_cast<int>(items.size());
  ws.ensure(student, student.shape().atom_count);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < kGradChunks; ++c) {
    BatchWorkspace::Chunk& chunk = ws.chunks[c];
    chunk.acc.zero();
    chunk.loss_sum = 0.0;
    for (int i = chunk_begin(c, n); i < chunk_begin(c + 1, n); ++i)
      chunk.loss_sum += distill_element(student, items[i], chunk);
  }
  return combine(ws, n, mean_grad);
}

double distill_batch_gradients_ref(const Mlp& student,
                                   std::span<const DistillItem> items,
                                   BatchWorkspace& ws, GradBuffer& mean_grad) {
  require(!items.empty(), "distill kernel: empty item set");
  const int n = static_cast<int>(items.size());
  ws.ensure(student, student.shape().atom_count);
  for (int c = 0; c < kGradChunks; ++c) {
    BatchWorkspace::Chunk& chunk = ws.chunks[c];
    chunk.acc.zero();
    chunk.loss_sum = 0.0;
    for (int i = chunk_begin(c, n); i < chunk_begin(c + 1, n); ++i)
      chunk.loss_sum += distill_element(student, items[i], chunk);
  }
  return combine(ws, n, mean_grad);
}

}  // namespace ltcr
