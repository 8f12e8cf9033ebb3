#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ltcr {

/// Shape of the value network: state vector in, action_count rows of
/// atom_count probabilities out (softmax per action row).
struct MlpShape {
  int input_dim = 0;
  std::vector<int> hidden;
  int action_count = 0;
  int atom_count = 0;

  int output_dim() const { return action_count * atom_count; }
  bool operator==(const MlpShape&) const = default;
};

/// Fully-connected ReLU network with per-action softmax heads. Plain value
/// type: copying it is how target networks and demonstration snapshots are
/// made.
class Mlp {
 public:
  struct Layer {
    int in = 0;
    int out = 0;
    std::vector<double> w;  // row-major, out x in
    std::vector<double> b;  // out
  };

  Mlp() = default;
  /// Uniform fan-in init: w ~ U(-1/sqrt(in), 1/sqrt(in)), b = 0.
  Mlp(const MlpShape& shape, std::uint64_t seed);

  const MlpShape& shape() const { return shape_; }
  int layer_count() const { return static_cast<int>(layers_.size()); }
  Layer& layer(int i) { return layers_[i]; }
  const Layer& layer(int i) const { return layers_[i]; }
  std::size_t param_count() const;

  bool same_shape(const Mlp& other) const { return shape_ == other.shape_; }

 private:
  MlpShape shape_;
  std::vector<Layer> layers_;
};

/// Activations captured during a forward pass, kept around for backprop.
/// act[0] is the input, act[l] the post-ReLU output of hidden layer l;
/// logits/probs are the final linear output and its per-action softmax.
struct ForwardTrace {
  std::vector<std::vector<double>> act;
  std::vector<double> logits;
  std::vector<double> probs;

  void ensure(const Mlp& net);
  std::span<const double> action_probs(const Mlp& net, int action) const;
};

/// Runs the network on `state`, filling `trace`. trace.probs holds
/// action_count contiguous normalized rows.
void forward(const Mlp& net, std::span<const double> state, ForwardTrace& trace);

/// Convenience wrapper returning one distribution per action.
std::vector<std::vector<double>> forward_dists(const Mlp& net,
                                               std::span<const double> state);

/// Per-parameter gradient accumulator shaped like an Mlp.
struct GradBuffer {
  std::vector<std::vector<double>> gw;
  std::vector<std::vector<double>> gb;

  void resize_like(const Mlp& net);
  void zero();
  void add_scaled(const GradBuffer& other, double scale);
};

/// Scratch vectors reused across backward passes.
struct BackwardScratch {
  std::vector<double> delta;
  std::vector<double> next_delta;
};

/// Backprop from d(loss)/d(probs of one action head) through that head's
/// softmax and the shared trunk, accumulating into `grad`. Heads other than
/// `action` contribute nothing locally; the trunk still picks up gradient.
void backward_from_probs(const Mlp& net, const ForwardTrace& trace, int action,
                         std::span<const double> grad_wrt_probs,
                         GradBuffer& grad, BackwardScratch& scratch);

/// One-shot variant that runs its own forward pass.
GradBuffer backward(const Mlp& net, std::span<const double> state, int action,
                    std::span<const double> grad_wrt_probs);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment state for Adam updates over an Mlp's parameters.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const Mlp& net, const AdamConfig& config);

  void step(Mlp& net, const GradBuffer& grad);
  long steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  GradBuffer m_;
  GradBuffer v_;
  long t_ = 0;
};

/// Frozen copy used as the bootstrap target.
inline Mlp sync_target(const Mlp& net) { return net; }

// Checkpoint format: fixed little-endian binary with a shape header
// ("LTCRNET1", version 1). See README for the exact layout.
void save_network(const Mlp& net, std::ostream& out);
Mlp load_network(std::istream& in);
void save_network_file(const Mlp& net, const std::string& path);
Mlp load_network_file(const std::string& path);

}  // namespace ltcr
