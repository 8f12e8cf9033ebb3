// Microbenchmark comparing the OpenMP training kernels against the serial
// reference implementations on the two production network sizes.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "ltcr/kernels.hpp"

using namespace ltcr;

namespace {

double time_per_call_us(const std::function<void()>& fn, int iters) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < iters; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::micro>(t1 - t0).count() / iters;
}

ReplayBuffer make_replay(Rng& rng, int n, int state_dim, int actions) {
  ReplayBuffer replay(n);
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.state.resize(state_dim);
    t.next_state.resize(state_dim);
    for (double& v : t.state) v = rng.uniform(-1, 1);
    for (double& v : t.next_state) v = rng.uniform(-1, 1);
    t.action = rng.uniform_int(actions);
    t.reward = rng.uniform(-1, 1);
    t.terminal = rng.uniform() < 0.1;
    replay.push(std::move(t));
  }
  return replay;
}

void bench_network(const char* label, const MlpShape& shape, double v_min,
                   double v_max) {
  Rng rng(1);
  const SupportGrid grid = make_support(v_min, v_max, shape.atom_count);
  const Mlp online(shape, rng.next_u64());
  const Mlp target(shape, rng.next_u64());
  const ReplayBuffer replay = make_replay(rng, 1024, shape.input_dim,
                                          shape.action_count);
  std::vector<std::size_t> batch(32);
  for (auto& b : batch) b = rng.uniform_int(1024);

  BatchWorkspace ws;
  GradBuffer grad;
  grad.resize_like(online);

  const int iters = 200;
  const double serial = time_per_call_us(
      [&] { c51_batch_gradients_ref(online, target, grid, 0.99, replay, batch, ws, grad); },
      iters);
  const double parallel = time_per_call_us(
      [&] { c51_batch_gradients(online, target, grid, 0.99, replay, batch, ws, grad); },
      iters);

  // Distillation kernel over 64 features.
  std::vector<std::vector<double>> states(64), targets(64);
  std::vector<DistillItem> items(64);
  for (int i = 0; i < 64; ++i) {
    states[i].resize(shape.input_dim);
    for (double& v : states[i]) v = rng.uniform(-1, 1);
    targets[i].resize(shape.atom_count);
    double sum = 0.0;
    for (double& v : targets[i]) {
      v = rng.uniform();
      sum += v;
    }
    for (double& v : targets[i]) v /= sum;
    items[i] = {states[i], rng.uniform_int(shape.action_count), targets[i]};
  }
  const double d_serial = time_per_call_us(
      [&] { distill_batch_gradients_ref(online, items, ws, grad); }, iters);
  const double d_parallel = time_per_call_us(
      [&] { distill_batch_gradients(online, items, ws, grad); }, iters);

  std::printf("%-14s  bellman batch32  serial %8.1f us  omp %8.1f us  speedup %.2fx\n",
              label, serial, parallel, serial / parallel);
  std::printf("%-14s  distill  x64     serial %8.1f us  omp %8.1f us  speedup %.2fx\n",
              label, d_serial, d_parallel, d_serial / d_parallel);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());

  MlpShape cartpole;
  cartpole.input_dim = 4;
  cartpole.hidden = {64, 64};
  cartpole.action_count = 2;
  cartpole.atom_count = 51;
  bench_network("cartpole-net", cartpole, 0.0, 200.0);

  MlpShape battle;
  battle.input_dim = 15;
  battle.hidden = {128, 128};
  battle.action_count = 4;
  battle.atom_count = 51;
  bench_network("battle-net", battle, -25.0, 75.0);

  // Projection alone, production atom count.
  Rng rng(2);
  const SupportGrid grid = make_support(0.0, 200.0, 51);
  std::vector<double> dist(51);
  double sum = 0.0;
  for (double& v : dist) {
    v = rng.uniform();
    sum += v;
  }
  for (double& v : dist) v /= sum;
  std::vector<double> out(51);
  const double proj = time_per_call_us(
      [&] { project_into(grid, 1.7, 0.99, dist.data(), false, out.data()); },
      100000);
  std::printf("projection K=51: %.3f us per call\n", proj);
  return 0;
}
