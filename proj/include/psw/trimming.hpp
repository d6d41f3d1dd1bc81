#pragma once

#include <limits>
#include <string>
#include <vector>

#include "psw/weights.hpp"

namespace psw {

struct TrimResult {
  std::vector<char> kept;  // per-unit keep mask
  // Symmetric rule threshold; NaN when the optimal rule was used.
  double delta_used = 0.0;
  // Optimal-rule threshold on g = sum_k 1/e_k; NaN for the symmetric rule.
  double gamma_star = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> labels;
  std::vector<int> trimmed_by_group;
  std::vector<int> remained_by_group;

  int total_trimmed() const;
  int total_remained() const;
  std::vector<int> kept_indices() const;
};

// Keeps unit i iff min_j e_j(x_i) >= delta (closed interval; with two groups
// this is e in [delta, 1-delta]). Requires 0 <= delta < 1/J.
TrimResult symmetric_trim(const PropensityMatrix& e, double delta,
                          const std::vector<int>& z_index);

// Variance-minimizing threshold rule: with g_i = sum_k 1/e_k(x_i), keeps the
// lower level set {g <= gamma*} whose empirical variance proxy
// sum_kept g / |kept|^2 is smallest over all candidate thresholds.
TrimResult optimal_trim(const PropensityMatrix& e, const std::vector<int>& z_index);

// Two-row table mirroring the trim summary print-out.
std::string format_trim_table(const TrimResult& trim);

}  // namespace psw
