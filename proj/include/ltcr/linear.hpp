#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ltcr {

/// Linear categorical value model: K outputs from a K x d weight matrix.
/// W * phi may be an improper distribution; a softmax is applied before any
/// KL is taken.
struct LinearModel {
  int atom_count = 0;     // K
  int feature_dim = 0;    // d
  std::vector<double> w;  // row-major, K x d

  static LinearModel zeros(int atom_count, int feature_dim);
  static LinearModel random(int atom_count, int feature_dim, std::uint64_t seed,
                            double scale = 1.0);
};

/// Fixed set of feature vectors phi_n, stored contiguously (n x d).
struct FeatureMap {
  int feature_dim = 0;
  std::vector<std::vector<double>> features;

  static FeatureMap random(int count, int feature_dim, std::uint64_t seed);
};

/// W * phi.
std::vector<double> linear_predict(const LinearModel& model,
                                   std::span<const double> phi);

std::vector<double> softmax(std::span<const double> logits);

struct DistillFlowResult {
  std::vector<double> kl_trace;  // mean KL over features, one entry per step
  LinearModel student;           // final weights
};

/// Fixed-stepsize gradient descent of the student on the mean softmax-KL
/// from the teacher's predictions over the feature set. Throws RunError if
/// the KL grows ten-fold across any 100-step stretch (stepsize too large).
DistillFlowResult distill_flow(const LinearModel& student,
                               const LinearModel& teacher,
                               const FeatureMap& features, double stepsize,
                               int steps);

/// Mean KL(softmax(teacher phi) || softmax(student phi)) over the features.
double linear_mean_kl(const LinearModel& student, const LinearModel& teacher,
                      const FeatureMap& features);

/// Largest total-variation distance between teacher and student softmax
/// predictions over the feature set.
double max_prediction_tv(const LinearModel& student, const LinearModel& teacher,
                         const FeatureMap& features);

/// W minus its per-column mean; softmax predictions are invariant under
/// adding a constant to every row of a column, so this is the canonical
/// representative the student can actually converge to.
LinearModel column_centered(const LinearModel& model);

}  // namespace ltcr
