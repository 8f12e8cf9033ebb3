#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ltcr/errors.hpp"
#include "ltcr/kernels.hpp"
#include "ltcr/network.hpp"
#include "oracles.hpp"

using namespace ltcr;

namespace {

MlpShape small_shape() {
  MlpShape s;
  s.input_dim = 4;
  s.hidden = {8};
  s.action_count = 2;
  s.atom_count = 5;
  return s;
}

std::vector<double> random_state(Rng& rng, int dim) {
  std::vector<double> s(dim);
  for (double& v : s) v = rng.uniform(-1.0, 1.0);
  return s;
}

std::vector<double> random_dist(Rng& rng, int k) {
  std::vector<double> p(k);
  double sum = 0.0;
  for (double& v : p) {
    v = rng.uniform(0.05, 1.0);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace

TEST_CASE("zero-weight network outputs uniform distributions") {
  Mlp net(small_shape(), 1);
  for (int l = 0; l < net.layer_count(); ++l) {
    std::fill(net.layer(l).w.begin(), net.layer(l).w.end(), 0.0);
    std::fill(net.layer(l).b.begin(), net.layer(l).b.end(), 0.0);
  }
  const auto dists = forward_dists(net, std::vector<double>{0.3, -0.2, 0.9, 0.0});
  REQUIRE(dists.size() == 2);
  for (const auto& d : dists)
    for (double p : d) CHECK(p == doctest::Approx(0.2));
}

TEST_CASE("forward rows are normalized and deterministic") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    Mlp net(small_shape(), rng.next_u64());
    const auto state = random_state(rng, 4);
    const auto a = forward_dists(net, state);
    const auto b = forward_dists(net, state);
    for (int row = 0; row < 2; ++row) {
      double sum = 0.0;
      for (double p : a[row]) {
        CHECK(p >= 0.0);
        sum += p;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(a[row] == b[row]);  // bitwise identical across runs
    }
  }
  Mlp net(small_shape(), 5);
  CHECK_THROWS_AS(forward_dists(net, std::vector<double>{1.0}), ContractViolation);
}

TEST_CASE("backward: zero upstream gradient and linearity") {
  Mlp net(small_shape(), 3);
  const std::vector<double> state{0.1, -0.4, 0.7, 0.2};

  const std::vector<double> zero(5, 0.0);
  const GradBuffer gz = backward(net, state, 0, zero);
  for (const auto& g : gz.gw)
    for (double v : g) CHECK(v == 0.0);
  for (const auto& g : gz.gb)
    for (double v : g) CHECK(v == 0.0);

  Rng rng(17);
  std::vector<double> up(5);
  for (double& v : up) v = rng.uniform(-1.0, 1.0);
  const GradBuffer g1 = backward(net, state, 1, up);
  for (double& v : up) v *= 2.0;
  const GradBuffer g2 = backward(net, state, 1, up);
  for (std::size_t l = 0; l < g1.gw.size(); ++l)
    for (std::size_t i = 0; i < g1.gw[l].size(); ++i)
      CHECK(g2.gw[l][i] == doctest::Approx(2.0 * g1.gw[l][i]).epsilon(1e-12));

  CHECK_THROWS_AS(backward(net, state, 7, up), ContractViolation);
}

TEST_CASE("analytic KL gradient matches finite differences") {
  Rng rng(2025);
  MlpShape shape;
  shape.input_dim = 4;
  shape.hidden = {8};
  shape.action_count = 2;
  shape.atom_count = 5;

  for (int trial = 0; trial < 5; ++trial) {
    Mlp net(shape, rng.next_u64());
    const auto state = random_state(rng, 4);
    const auto target = random_dist(rng, 5);
    const int action = rng.uniform_int(2);

    ForwardTrace trace;
    forward(net, state, trace);
    std::vector<double> grad_probs;
    kl_grad_wrt_q(target, trace.action_probs(net, action), grad_probs);
    GradBuffer grad;
    grad.resize_like(net);
    BackwardScratch scratch;
    backward_from_probs(net, trace, action, grad_probs, grad, scratch);

    auto loss = [&](const Mlp& m) {
      ForwardTrace t;
      forward(m, state, t);
      return kl_divergence(target, t.action_probs(m, action));
    };
    const auto check = oracle::finite_difference_check(net, grad, loss, 100,
                                                       rng.next_u64());
    CHECK(check.probes_checked > 25);
    CHECK(check.max_rel_error < 1e-4);
  }
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  Mlp net(small_shape(), 9);
  const Mlp before = net;
  AdamState opt(net, {});
  GradBuffer zero;
  zero.resize_like(net);
  opt.step(net, zero);
  CHECK(opt.steps() == 1);
  for (int l = 0; l < net.layer_count(); ++l)
    CHECK(net.layer(l).w == before.layer(l).w);
}

TEST_CASE("adam walks against the gradient sign") {
  MlpShape tiny;
  tiny.input_dim = 1;
  tiny.hidden = {};
  tiny.action_count = 1;
  tiny.atom_count = 2;
  Mlp net(tiny, 4);
  const double start = net.layer(0).w[0];
  AdamState opt(net, {.learning_rate = 1e-2});
  GradBuffer g;
  g.resize_like(net);
  for (int i = 0; i < 100; ++i) {
    g.zero();
    g.gw[0][0] = 3.0;  // constant positive gradient
    opt.step(net, g);
  }
  CHECK(net.layer(0).w[0] < start);
}

TEST_CASE("adam minimizes a quadratic bowl") {
  // loss = 0.5 * sum(theta^2), gradient = theta.
  Mlp net(small_shape(), 77);
  AdamState opt(net, {.learning_rate = 1e-2});
  GradBuffer g;
  g.resize_like(net);
  for (int step = 0; step < 5000; ++step) {
    for (int l = 0; l < net.layer_count(); ++l) {
      g.gw[l] = net.layer(l).w;
      g.gb[l] = net.layer(l).b;
    }
    opt.step(net, g);
  }
  double loss = 0.0;
  for (int l = 0; l < net.layer_count(); ++l) {
    for (double v : net.layer(l).w) loss += 0.5 * v * v;
    for (double v : net.layer(l).b) loss += 0.5 * v * v;
  }
  CHECK(loss < 1e-6);
}

TEST_CASE("sync_target takes a frozen copy") {
  Mlp net(small_shape(), 13);
  const std::vector<double> state{0.5, 0.5, -0.5, 0.25};
  Mlp target = sync_target(net);
  CHECK(forward_dists(net, state) == forward_dists(target, state));

  Mlp target2 = sync_target(net);
  CHECK(forward_dists(target, state) == forward_dists(target2, state));

  const auto before = forward_dists(target, state);
  net.layer(0).w[0] += 1.0;  // mutate the online net
  CHECK(forward_dists(target, state) == before);
  CHECK(forward_dists(net, state) != before);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  MlpShape shape;
  shape.input_dim = 3;
  shape.hidden = {6, 4};
  shape.action_count = 2;
  shape.atom_count = 7;
  Mlp net(shape, 4242);

  std::stringstream buffer;
  save_network(net, buffer);
  const Mlp loaded = load_network(buffer);
  REQUIRE(loaded.shape() == shape);
  for (int l = 0; l < net.layer_count(); ++l) {
    CHECK(loaded.layer(l).w == net.layer(l).w);
    CHECK(loaded.layer(l).b == net.layer(l).b);
  }

  std::stringstream bad("junkjunkjunk");
  CHECK_THROWS_AS(load_network(bad), RunError);
}
