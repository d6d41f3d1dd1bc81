#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "psw/weights.hpp"

namespace psw {

// Estimated average potential outcomes mu_j in the tilted target population.
// nu and eta keep the two estimating-equation components (mu = nu + eta for
// the augmented estimator, mu = nu otherwise) for the variance machinery.
struct PotentialOutcomeMeans {
  Eigen::VectorXd mu;
  Eigen::VectorXd nu;
  Eigen::VectorXd eta;  // empty unless augmented
  WeightScheme scheme;
  bool augmented = false;
  Eigen::MatrixXd m;  // N x J outcome predictions (augmented only)
};

// Ratio-of-weighted-sums estimator per group:
// mu_j = sum_{i in group j} w_i Y_i / sum_{i in group j} w_i.
PotentialOutcomeMeans hajek_means(const Eigen::VectorXd& y, const TiltedWeights& tw,
                                  const std::vector<int>& z_index, int n_groups);

// Weighting estimator with outcome-regression augmentation:
// mu_j = [weighted mean of residuals Y - m_j within group j]
//      + [h-weighted mean of m_j over all units].
PotentialOutcomeMeans augmented_means(const Eigen::VectorXd& y,
                                      const TiltedWeights& tw,
                                      const std::vector<int>& z_index,
                                      const Eigen::MatrixXd& m);

enum class Scale { DIF, RR, OR };

Scale scale_from_string(const std::string& name);
std::string to_string(Scale s);

struct ContrastSpec {
  Eigen::MatrixXd coef;  // K x J
  Scale scale = Scale::DIF;
  std::vector<std::string> labels;  // one per row
};

// All J(J-1)/2 pairwise rows, ordered lexicographically over label pairs;
// each row is +1 on the later label, -1 on the earlier, and labeled
// "later - earlier" explicitly.
ContrastSpec pairwise_contrasts(const std::vector<std::string>& group_labels,
                                Scale scale);

// Parses semicolon-separated rows of comma-separated coefficients,
// e.g. "1,-1,0;1,0,-1;0,-1,1".
ContrastSpec parse_contrast(const std::string& text, int n_groups, Scale scale);

// Point estimates per contrast row: DIF sum a_j mu_j; RR sum a_j log mu_j;
// OR sum a_j [log mu_j - log(1 - mu_j)]. Scale domain violations are hard
// errors.
Eigen::VectorXd apply_contrast(const PotentialOutcomeMeans& pom,
                               const ContrastSpec& contrast);

}  // namespace psw
