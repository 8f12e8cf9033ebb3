#include "ltcr/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "ltcr/errors.hpp"
#include "ltcr/rng.hpp"

namespace ltcr {

Mlp::Mlp(const MlpShape& shape, std::uint64_t seed) : shape_(shape) {
  require_config(shape.input_dim > 0, "network: input_dim must be positive");
  require_config(shape.action_count > 0, "network: action_count must be positive");
  require_config(shape.atom_count >= 2, "network: atom_count must be >= 2");
  for (int h : shape.hidden)
    require_config(h > 0, "network: hidden sizes must be positive");

  std::vector<int> dims;
  dims.push_back(shape.input_dim);
  for (int h : shape.hidden) dims.push_back(h);
  dims.push_back(shape.output_dim());

  Rng rng(seed);
  layers_.resize(dims.size() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer& layer = layers_[l];
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.w.resize(static_cast<std::size_t>(layer.in) * layer.out);
    layer.b.assign(layer.out, 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (double& w : layer.w) w = rng.uniform(-bound, bound);
  }
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += l.w.size() + l.b.size();
  return n;
}

void ForwardTrace::ensure(const Mlp& net) {
  const std::size_t n_act = net.layer_count();  // input + each hidden output
  if (act.size() != n_act) act.resize(n_act);
  act[0].resize(net.shape().input_dim);
  for (int l = 0; l + 1 < net.layer_count(); ++l) act[l + 1].resize(net.layer(l).out);
  logits.resize(net.shape().output_dim());
  probs.resize(net.shape().output_dim());
}

std::span<const double> ForwardTrace::action_probs(const Mlp& net,
                                                   int action) const {
  const int K = net.shape().atom_count;
  return {probs.data() + static_cast<std::size_t>(action) * K,
          static_cast<std::size_t>(K)};
}

namespace {

void affine(const Mlp::Layer& l, const double* x, double* out) {
  for (int o = 0; o < l.out; ++o) {
    const double* w = l.w.data() + static_cast<std::size_t>(o) * l.in;
    double acc = l.b[o];
    for (int i = 0; i < l.in; ++i) acc += w[i] * x[i];
    out[o] = acc;
  }
}

void softmax_rows(const double* logits, double* probs, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const double* in = logits + static_cast<std::size_t>(r) * cols;
    double* out = probs + static_cast<std::size_t>(r) * cols;
    double mx = in[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
    double sum = 0.0;
    for (int c = 0; c < cols; ++c) {
      out[c] = std::exp(in[c] - mx);
      sum += out[c];
    }
    const double inv = 1.0 / sum;
    for (int c = 0; c < cols; ++c) out[c] *= inv;
  }
}

}  // namespace

void forward(const Mlp& net, std::span<const double> state, ForwardTrace& trace) {
  require(static_cast<int>(state.size()) == net.shape().input_dim,
          "forward: state dimension mismatch");
  trace.ensure(net);
  std::copy(state.begin(), state.end(), trace.act[0].begin());

  const int L = net.layer_count();
  for (int l = 0; l < L - 1; ++l) {
    const Mlp::Layer& layer = net.layer(l);
    affine(layer, trace.act[l].data(), trace.act[l + 1].data());
    for (double& v : trace.act[l + 1]) v = v > 0.0 ? v : 0.0;
  }
  affine(net.layer(L - 1), trace.act[L - 1].data(), trace.logits.data());
  softmax_rows(trace.logits.data(), trace.probs.data(),
               net.shape().action_count, net.shape().atom_count);
}

std::vector<std::vector<double>> forward_dists(const Mlp& net,
                                               std::span<const double> state) {
  ForwardTrace trace;
  forward(net, state, trace);
  const int K = net.shape().atom_count;
  std::vector<std::vector<double>> dists(net.shape().action_count);
  for (int a = 0; a < net.shape().action_count; ++a) {
    dists[a].assign(trace.probs.begin() + static_cast<std::size_t>(a) * K,
                    trace.probs.begin() + static_cast<std::size_t>(a + 1) * K);
  }
  return dists;
}

void GradBuffer::resize_like(const Mlp& net) {
  gw.resize(net.layer_count());
  gb.resize(net.layer_count());
  for (int l = 0; l < net.layer_count(); ++l) {
    gw[l].assign(net.layer(l).w.size(), 0.0);
    gb[l].assign(net.layer(l).b.size(), 0.0);
  }
}

void GradBuffer::zero() {
  for (auto& v : gw) std::fill(v.begin(), v.end(), 0.0);
  for (auto& v : gb) std::fill(v.begin(), v.end(), 0.0);
}

void GradBuffer::add_scaled(const GradBuffer& other, double scale) {
  for (std::size_t l = 0; l < gw.size(); ++l) {
    const double* src = other.gw[l].data();
    double* dst = gw[l].data();
    for (std::size_t i = 0; i < gw[l].size(); ++i) dst[i] += scale * src[i];
    const double* sb = other.gb[l].data();
    double* db = gb[l].data();
    for (std::size_t i = 0; i < gb[l].size(); ++i) db[i] += scale * sb[i];
  }
}

void backward_from_probs(const Mlp& net, const ForwardTrace& trace, int action,
                         std::span<const double> grad_wrt_probs,
                         GradBuffer& grad, BackwardScratch& scratch) {
  const MlpShape& shape = net.shape();
  const int K = shape.atom_count;
  require(action >= 0 && action < shape.action_count,
          "backward: invalid action index");
  require(static_cast<int>(grad_wrt_probs.size()) == K,
          "backward: gradient length does not match atom count");

  // Softmax Jacobian for the selected head only:
  //   d/dlogit_j = q_j * (g_j - sum_k g_k q_k).
  const double* q = trace.probs.data() + static_cast<std::size_t>(action) * K;
  double dot = 0.0;
  for (int k = 0; k < K; ++k) dot += grad_wrt_probs[k] * q[k];

  const int L = net.layer_count();
  const Mlp::Layer& head = net.layer(L - 1);
  const std::vector<double>& last_act = trace.act[L - 1];

  scratch.delta.assign(head.in, 0.0);
  const int row0 = action * K;
  for (int k = 0; k < K; ++k) {
    const int o = row0 + k;
    const double dlogit = q[k] * (grad_wrt_probs[k] - dot);
    grad.gb[L - 1][o] += dlogit;
    double* gw = grad.gw[L - 1].data() + static_cast<std::size_t>(o) * head.in;
    const double* w = head.w.data() + static_cast<std::size_t>(o) * head.in;
    for (int i = 0; i < head.in; ++i) {
      gw[i] += dlogit * last_act[i];
      scratch.delta[i] += dlogit * w[i];
    }
  }

  for (int l = L - 2; l >= 0; --l) {
    const Mlp::Layer& layer = net.layer(l);
    const std::vector<double>& in_act = trace.act[l];
    const std::vector<double>& out_act = trace.act[l + 1];
    if (l > 0) scratch.next_delta.assign(layer.in, 0.0);
    for (int o = 0; o < layer.out; ++o) {
      if (out_act[o] <= 0.0) continue;  // ReLU gate
      const double d = scratch.delta[o];
      if (d == 0.0) continue;
      grad.gb[l][o] += d;
      double* gw = grad.gw[l].data() + static_cast<std::size_t>(o) * layer.in;
      const double* w = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
      if (l > 0) {
        for (int i = 0; i < layer.in; ++i) {
          gw[i] += d * in_act[i];
          scratch.next_delta[i] += d * w[i];
        }
      } else {
        for (int i = 0; i < layer.in; ++i) gw[i] += d * in_act[i];
      }
    }
    if (l > 0) std::swap(scratch.delta, scratch.next_delta);
  }
}

GradBuffer backward(const Mlp& net, std::span<const double> state, int action,
                    std::span<const double> grad_wrt_probs) {
  ForwardTrace trace;
  forward(net, state, trace);
  GradBuffer grad;
  grad.resize_like(net);
  BackwardScratch scratch;
  backward_from_probs(net, trace, action, grad_wrt_probs, grad, scratch);
  return grad;
}

AdamState::AdamState(const Mlp& net, const AdamConfig& config) : config_(config) {
  require_config(config.learning_rate > 0.0, "adam: learning rate must be > 0");
  m_.resize_like(net);
  v_.resize_like(net);
}

void AdamState::step(Mlp& net, const GradBuffer& grad) {
  require(m_.gw.size() == static_cast<std::size_t>(net.layer_count()) &&
              grad.gw.size() == m_.gw.size(),
          "adam: shape mismatch");
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = config_.learning_rate;

  for (int l = 0; l < net.layer_count(); ++l) {
    auto update = [&](std::vector<double>& theta, std::vector<double>& m,
                      std::vector<double>& v, const std::vector<double>& g) {
      require(theta.size() == g.size(), "adam: gradient shape mismatch");
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double mhat = m[i] / corr1;
        const double vhat = v[i] / corr2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
      }
    };
    update(net.layer(l).w, m_.gw[l], v_.gw[l], grad.gw[l]);
    update(net.layer(l).b, m_.gb[l], v_.gb[l], grad.gb[l]);
  }
}

namespace {

constexpr char kMagic[8] = {'L', 'T', 'C', 'R', 'N', 'E', 'T', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_network(const Mlp& net, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, 1);  // version
  put_u32(out, static_cast<std::uint32_t>(net.shape().input_dim));
  put_u32(out, static_cast<std::uint32_t>(net.shape().hidden.size()));
  for (int h : net.shape().hidden) put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(net.shape().action_count));
  put_u32(out, static_cast<std::uint32_t>(net.shape().atom_count));
  for (int l = 0; l < net.layer_count(); ++l) {
    for (double w : net.layer(l).w) put_f64(out, w);
    for (double b : net.layer(l).b) put_f64(out, b);
  }
}

Mlp load_network(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw RunError("network checkpoint: bad magic");
  const std::uint32_t version = get_u32(in);
  if (version != 1) throw RunError("network checkpoint: unsupported version");

  MlpShape shape;
  shape.input_dim = static_cast<int>(get_u32(in));
  const std::uint32_t n_hidden = get_u32(in);
  shape.hidden.resize(n_hidden);
  for (std::uint32_t i = 0; i < n_hidden; ++i)
    shape.hidden[i] = static_cast<int>(get_u32(in));
  shape.action_count = static_cast<int>(get_u32(in));
  shape.atom_count = static_cast<int>(get_u32(in));

  Mlp net(shape, 0);
  for (int l = 0; l < net.layer_count(); ++l) {
    for (double& w : net.layer(l).w) w = get_f64(in);
    for (double& b : net.layer(l).b) b = get_f64(in);
  }
  if (!in) throw RunError("network checkpoint: truncated file");
  return net;
}

void save_network_file(const Mlp& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RunError("cannot open checkpoint for writing: " + path);
  save_network(net, out);
}

Mlp load_network_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RunError("cannot open checkpoint: " + path);
  return load_network(in);
}

}  // namespace ltcr
