#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "psw/design.hpp"

namespace psw {

enum class Family { gaussian, binomial, poisson };

Family family_from_string(const std::string& name);
std::string to_string(Family f);

struct GlmOptions {
  int max_iterations = 100;
  double deviance_tol = 1e-8;  // relative deviance change
  int max_step_halvings = 10;
  double score_tol = 1e-6;     // max-norm of the total score at exit
  double eta_guard = 30.0;     // |linear predictor| beyond this blocks convergence
};

// A fitted single-equation GLM with canonical link. `fitted` covers every
// row of the design handed in; when a subset mask was given, only masked
// rows entered the likelihood (score rows outside the subset are zero).
struct GlmFit {
  Family family = Family::gaussian;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd fitted;  // mean scale, all rows
  Eigen::VectorXd eta;     // linear predictor incl. offset, all rows
  bool converged = false;
  int iterations = 0;
  double deviance = 0.0;

  // retained for M-estimation
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<char> subset;  // empty = all rows in the likelihood
  Eigen::VectorXd offset;    // size 0 = none

  bool in_subset(int i) const { return subset.empty() || subset[i]; }

  // dmu/deta (the variance function under the canonical link), all rows.
  Eigen::VectorXd mean_derivative() const;
  // Per-unit score (y_i - mu_i) x_i; zero off-subset. N x q.
  Eigen::MatrixXd score_matrix() const;
  Eigen::VectorXd score(int i) const;
  // Fisher information over the subset: sum v_i x_i x_i'.
  Eigen::MatrixXd information() const;
};

// Maximum-likelihood logistic regression of a 0/1 response, by iteratively
// reweighted least squares with step-halving. Errors on rank deficiency and
// on non-convergence (e.g. separation) at the iteration cap.
GlmFit fit_binary_logistic(const DesignMatrix& X, const Eigen::VectorXd& z,
                           const GlmOptions& opts = {});

// Group-specific outcome regression: rows with subset[i] != 0 enter the
// likelihood, predictions extend to every row. An offset is only accepted
// with the poisson family. An empty subset means all rows.
GlmFit fit_outcome_glm(const DesignMatrix& X, const Eigen::VectorXd& y,
                       Family family, const std::vector<char>& subset,
                       const Eigen::VectorXd& offset = Eigen::VectorXd(),
                       const GlmOptions& opts = {});

// Baseline-category multinomial logit, J >= 3 levels coded 0..J-1 with 0 the
// (lexicographically first) reference. Newton iteration on the stacked
// (J-1) x q coefficient matrix.
struct MultinomialFit {
  Eigen::MatrixXd coefficients;  // (J-1) x q; row j-1 = logits of level j vs 0
  Eigen::MatrixXd fitted;        // N x J, rows sum to 1
  bool converged = false;
  int iterations = 0;
  double deviance = 0.0;
  int n_groups = 0;

  Eigen::MatrixXd X;
  std::vector<int> z;

  // Per-unit score, blocks j = 1..J-1 of (D_ij - p_ij) x_i. N x (J-1)q.
  Eigen::MatrixXd score_matrix() const;
  // Fisher information, (J-1)q square with blocks sum p_j (d_jk - p_k) xx'.
  Eigen::MatrixXd information() const;
};

MultinomialFit fit_multinomial_logistic(const DesignMatrix& X,
                                        const std::vector<int>& z, int n_groups,
                                        const GlmOptions& opts = {});

}  // namespace psw
