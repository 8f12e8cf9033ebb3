#include "ltcr/distribution.hpp"

#include <algorithm>
#include <cmath>

#include "ltcr/errors.hpp"

namespace ltcr {

SupportGrid make_support(double v_min, double v_max, int atom_count) {
  require_config(v_min < v_max, "support: v_min must be < v_max");
  require_config(atom_count >= 2, "support: need at least 2 atoms");
  SupportGrid grid;
  grid.v_min = v_min;
  grid.v_max = v_max;
  grid.atom_count = atom_count;
  grid.atoms.resize(atom_count);
  const double step = (v_max - v_min) / (atom_count - 1);
  for (int k = 0; k < atom_count; ++k) grid.atoms[k] = v_min + k * step;
  grid.atoms.front() = v_min;
  grid.atoms.back() = v_max;
  return grid;
}

bool is_normalized(std::span<const double> probs, double tol) {
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0 || !std::isfinite(p)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

void project_into(const SupportGrid& grid, double reward, double discount,
                  const double* next_probs, bool terminal, double* out) {
  const int K = grid.atom_count;
  const double inv_dz = 1.0 / grid.delta();
  std::fill(out, out + K, 0.0);

  auto spread = [&](double value, double mass) {
    const double tz = std::clamp(value, grid.v_min, grid.v_max);
    double b = (tz - grid.v_min) * inv_dz;
    b = std::clamp(b, 0.0, static_cast<double>(K - 1));
    const int lo = static_cast<int>(std::floor(b));
    const int hi = static_cast<int>(std::ceil(b));
    if (lo == hi) {
      out[lo] += mass;
    } else {
      out[lo] += mass * (hi - b);
      out[hi] += mass * (b - lo);
    }
  };

  if (terminal) {
    // No successor: the Bellman target collapses to the clamped reward.
    spread(reward, 1.0);
    return;
  }
  for (int k = 0; k < K; ++k) {
    spread(reward + discount * grid.atoms[k], next_probs[k]);
  }
}

std::vector<double> project(const SupportGrid& grid, double reward,
                            double discount, std::span<const double> next_probs,
                            bool terminal) {
  require(static_cast<int>(next_probs.size()) == grid.atom_count,
          "project: distribution length does not match the grid");
  require(is_normalized(next_probs), "project: input distribution not normalized");
  std::vector<double> out(grid.atom_count);
  project_into(grid, reward, discount, next_probs.data(), terminal, out.data());
  return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), "kl_divergence: length mismatch");
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    kl += p[k] * std::log(p[k] / std::max(q[k], kKlFloor));
  }
  return kl;
}

double mean_value(const SupportGrid& grid, std::span<const double> probs) {
  require(static_cast<int>(probs.size()) == grid.atom_count,
          "mean_value: distribution length does not match the grid");
  double mean = 0.0;
  for (int k = 0; k < grid.atom_count; ++k) mean += grid.atoms[k] * probs[k];
  return mean;
}

int greedy_action(const SupportGrid& grid, const double* probs_per_action,
                  int action_count) {
  require(action_count > 0, "greedy_action: empty action list");
  int best = 0;
  double best_mean = mean_value(grid, {probs_per_action, probs_per_action + grid.atom_count});
  for (int a = 1; a < action_count; ++a) {
    const double* row = probs_per_action + a * grid.atom_count;
    const double mean = mean_value(grid, {row, row + grid.atom_count});
    if (mean > best_mean) {
      best_mean = mean;
      best = a;
    }
  }
  return best;
}

int greedy_action(const SupportGrid& grid,
                  const std::vector<std::vector<double>>& dists) {
  require(!dists.empty(), "greedy_action: empty action list");
  int best = 0;
  double best_mean = mean_value(grid, dists[0]);
  for (std::size_t a = 1; a < dists.size(); ++a) {
    const double mean = mean_value(grid, dists[a]);
    if (mean > best_mean) {
      best_mean = mean;
      best = static_cast<int>(a);
    }
  }
  return best;
}

}  // namespace ltcr
