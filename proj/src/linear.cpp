#include "ltcr/linear.hpp"

#include <algorithm>
#include <cmath>

#include "ltcr/distribution.hpp"
#include "ltcr/errors.hpp"
#include "ltcr/rng.hpp"

namespace ltcr {

LinearModel LinearModel::zeros(int atom_count, int feature_dim) {
  require_config(atom_count >= 2 && feature_dim >= 1, "linear model: bad shape");
  LinearModel m;
  m.atom_count = atom_count;
  m.feature_dim = feature_dim;
  m.w.assign(static_cast<std::size_t>(atom_count) * feature_dim, 0.0);
  return m;
}

LinearModel LinearModel::random(int atom_count, int feature_dim,
                                std::uint64_t seed, double scale) {
  LinearModel m = zeros(atom_count, feature_dim);
  Rng rng(seed);
  for (double& w : m.w) w = rng.uniform(-scale, scale);
  return m;
}

FeatureMap FeatureMap::random(int count, int feature_dim, std::uint64_t seed) {
  FeatureMap f;
  f.feature_dim = feature_dim;
  f.features.resize(count);
  Rng rng(seed);
  for (auto& phi : f.features) {
    phi.resize(feature_dim);
    for (double& v : phi) v = rng.uniform(-1.0, 1.0);
  }
  return f;
}

std::vector<double> linear_predict(const LinearModel& model,
                                   std::span<const double> phi) {
  require(static_cast<int>(phi.size()) == model.feature_dim,
          "linear_predict: feature dimension mismatch");
  std::vector<double> out(model.atom_count, 0.0);
  for (int k = 0; k < model.atom_count; ++k) {
    const double* row = model.w.data() + static_cast<std::size_t>(k) * model.feature_dim;
    double acc = 0.0;
    for (int j = 0; j < model.feature_dim; ++j) acc += row[j] * phi[j];
    out[k] = acc;
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - mx);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
  return out;
}

double linear_mean_kl(const LinearModel& student, const LinearModel& teacher,
                      const FeatureMap& features) {
  double total = 0.0;
  for (const auto& phi : features.features) {
    const auto p = softmax(linear_predict(teacher, phi));
    const auto q = softmax(linear_predict(student, phi));
    total += kl_divergence(p, q);
  }
  return total / static_cast<double>(features.features.size());
}

DistillFlowResult distill_flow(const LinearModel& student,
                               const LinearModel& teacher,
                               const FeatureMap& features, double stepsize,
                               int steps) {
  require(steps >= 1, "distill_flow: steps must be >= 1");
  require(!features.features.empty(), "distill_flow: empty feature set");
  require(student.atom_count == teacher.atom_count &&
              student.feature_dim == teacher.feature_dim,
          "distill_flow: model shapes differ");

  const int K = student.atom_count;
  const int d = student.feature_dim;
  const int N = static_cast<int>(features.features.size());
  const double inv_n = 1.0 / static_cast<double>(N);

  // Teacher predictions are fixed; compute them once.
  std::vector<std::vector<double>> targets(N);
  for (int n = 0; n < N; ++n)
    targets[n] = softmax(linear_predict(teacher, features.features[n]));

  DistillFlowResult result;
  result.student = student;
  result.kl_trace.reserve(steps);
  std::vector<double> grad(static_cast<std::size_t>(K) * d);

  double window_start_kl = -1.0;
  for (int step = 0; step < steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double kl = 0.0;
    for (int n = 0; n < N; ++n) {
      const auto& phi = features.features[n];
      const auto q = softmax(linear_predict(result.student, phi));
      const auto& p = targets[n];
      kl += kl_divergence(p, q);
      // d KL / d logits = q - p, so d KL / d W = (q - p) phi^T.
      for (int k = 0; k < K; ++k) {
        const double diff = q[k] - p[k];
        double* row = grad.data() + static_cast<std::size_t>(k) * d;
        for (int j = 0; j < d; ++j) row[j] += diff * phi[j];
      }
    }
    kl *= inv_n;
    result.kl_trace.push_back(kl);

    if (step % 100 == 0) {
      if (window_start_kl >= 0.0 && kl > 10.0 * window_start_kl &&
          kl > 1e-12) {
        throw RunError("distill_flow: diverging — stepsize too large");
      }
      window_start_kl = kl;
    }

    for (std::size_t i = 0; i < result.student.w.size(); ++i)
      result.student.w[i] -= stepsize * inv_n * grad[i];
  }
  return result;
}

double max_prediction_tv(const LinearModel& student, const LinearModel& teacher,
                         const FeatureMap& features) {
  double worst = 0.0;
  for (const auto& phi : features.features) {
    const auto p = softmax(linear_predict(teacher, phi));
    const auto q = softmax(linear_predict(student, phi));
    double tv = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) tv += std::abs(p[k] - q[k]);
    worst = std::max(worst, 0.5 * tv);
  }
  return worst;
}

LinearModel column_centered(const LinearModel& model) {
  LinearModel out = model;
  for (int j = 0; j < model.feature_dim; ++j) {
    double mean = 0.0;
    for (int k = 0; k < model.atom_count; ++k)
      mean += model.w[static_cast<std::size_t>(k) * model.feature_dim + j];
    mean /= model.atom_count;
    for (int k = 0; k < model.atom_count; ++k)
      out.w[static_cast<std::size_t>(k) * model.feature_dim + j] -= mean;
  }
  return out;
}

}  // namespace ltcr
