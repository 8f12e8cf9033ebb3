#pragma once

#include <span>
#include <vector>

namespace ltcr {

/// Fixed discrete support the categorical value distributions live on.
/// atoms[k] = v_min + k * (v_max - v_min) / (atom_count - 1).
struct SupportGrid {
  double v_min = 0.0;
  double v_max = 0.0;
  int atom_count = 0;
  std::vector<double> atoms;

  double delta() const { return (v_max - v_min) / (atom_count - 1); }
};

SupportGrid make_support(double v_min, double v_max, int atom_count);

/// Tolerance used when validating that a probability vector sums to one.
inline constexpr double kNormalizationTolerance = 1e-9;

/// Floor applied to the second argument of the KL divergence so softmax
/// underflow cannot produce an infinite loss.
inline constexpr double kKlFloor = 1e-12;

bool is_normalized(std::span<const double> probs,
                   double tol = kNormalizationTolerance);

/// Projects the shifted/scaled distribution (reward + discount * z, probs)
/// back onto the grid. Each shifted atom is clamped to [v_min, v_max] and its
/// mass split linearly between the two neighbouring support atoms; mass that
/// lands exactly on an atom stays there. Terminal transitions collapse to a
/// point mass at clamp(reward).
void project_into(const SupportGrid& grid, double reward, double discount,
                  const double* next_probs, bool terminal, double* out);

std::vector<double> project(const SupportGrid& grid, double reward,
                            double discount, std::span<const double> next_probs,
                            bool terminal);

/// KL(p || q) = sum_k p_k log(p_k / q_k) with q floored at kKlFloor and the
/// 0 * log(0/..) = 0 convention.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// E[Z] = z . p
double mean_value(const SupportGrid& grid, std::span<const double> probs);

/// Index of the action with the largest mean value; ties go to the lowest
/// index. probs_per_action holds action_count contiguous rows of atom_count
/// probabilities.
int greedy_action(const SupportGrid& grid, const double* probs_per_action,
                  int action_count);

int greedy_action(const SupportGrid& grid,
                  const std::vector<std::vector<double>>& dists);

}  // namespace ltcr
