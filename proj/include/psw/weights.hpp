#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace psw {

// The five balancing-weight families. CLI names are the lowercase strings.
enum class Scheme { ipw, treated, overlap, matching, entropy };

Scheme scheme_from_string(const std::string& name);
std::string to_string(Scheme s);

struct WeightScheme {
  Scheme kind = Scheme::overlap;
  // Group receiving weight 1 under the treated scheme; defaults to the last
  // label in lexicographic order when left at -1.
  int treated_index = -1;

  int resolve_treated(int n_groups) const {
    return treated_index >= 0 ? treated_index : n_groups - 1;
  }
};

// Per-unit generalized propensity scores, one column per treatment level in
// lexicographic label order. Entries are clamped into [1e-6, 1-1e-6] (rows
// renormalized) with the number of clamped cells recorded.
class PropensityMatrix {
 public:
  enum class Source { fitted, external };

  PropensityMatrix(Eigen::MatrixXd values, std::vector<std::string> labels,
                   Source source);

  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& group_labels() const { return labels_; }
  Source source() const { return source_; }
  int clamp_count() const { return clamp_count_; }
  int rows() const { return static_cast<int>(values_.rows()); }
  int groups() const { return static_cast<int>(values_.cols()); }

  static constexpr double kClampLo = 1e-6;

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> labels_;
  Source source_;
  int clamp_count_ = 0;
};

// Tilting function h(x) per unit for a scheme:
//   ipw 1; treated e_t; overlap {sum_k 1/e_k}^-1; matching min_k e_k;
//   entropy -sum_k e_k log e_k.
Eigen::VectorXd tilting(const WeightScheme& scheme, const PropensityMatrix& e);

struct TiltedWeights {
  Eigen::VectorXd h;  // tilting values
  Eigen::VectorXd w;  // unit i gets h(x_i) / e_{Z_i}(x_i)
  WeightScheme scheme;
  int clamp_count = 0;  // propagated from the propensity matrix
};

// Balancing weight of each unit's own group; no global normalization (the
// Hajek estimators normalize within group).
TiltedWeights unit_weights(const WeightScheme& scheme, const PropensityMatrix& e,
                           const std::vector<int>& z_index);

// Kish effective sample size per group: (sum w)^2 / sum w^2.
Eigen::VectorXd effective_sample_size(const TiltedWeights& tw,
                                      const std::vector<int>& z_index, int n_groups);

}  // namespace psw
