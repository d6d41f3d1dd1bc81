#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "psw/dataset.hpp"
#include "psw/weights.hpp"

namespace psw {

// Synthetic observational-data mechanism with known propensity and outcome
// models. Covariates are independent standard normals; treatment follows a
// multinomial logit on the feature vector (1, x1..xp [, x1^2]); outcomes are
// linear-predictor means per arm, gaussian noise or a Bernoulli draw through
// the logit link.
struct Scenario {
  std::string name;
  int arms = 2;
  int covariate_dim = 4;
  Eigen::MatrixXd ps_coef;       // (arms-1) x n_features
  bool quadratic_ps = false;     // appends x1^2 to the propensity features
  Eigen::MatrixXd outcome_coef;  // arms x (1 + covariate_dim)
  double noise_sd = 1.0;
  enum class Outcome { gaussian, binomial } outcome = Outcome::gaussian;
  enum class Effect { constant, heterogeneous } effect = Effect::constant;

  int n_features() const { return 1 + covariate_dim + (quadratic_ps ? 1 : 0); }
  std::vector<std::string> group_labels() const;

  Eigen::RowVectorXd features(const Eigen::RowVectorXd& x) const;
  Eigen::RowVectorXd true_propensity(const Eigen::RowVectorXd& x) const;
  double mean_outcome(const Eigen::RowVectorXd& x, int arm) const;
};

// Built-in scenarios: A binary/good overlap, constant effect 0.5; Ahet as A
// with unit-slope heterogeneous effect; B as A with propensity coefficients
// scaled x3 (poor overlap); C three arms with a binary outcome; D binary with
// a quadratic true propensity term (misspecifiable) and constant effect 0.5.
const Scenario& builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

// Deterministic given (scenario, seed). Columns x1..xp, z, y.
Dataset generate(const Scenario& s, int n, std::uint64_t seed);

// Monte Carlo evaluation of the tilted means E[h m_j]/E[h] under the TRUE
// propensities, with delta-method Monte Carlo standard errors.
struct WateOracle {
  std::vector<std::string> labels;
  Eigen::VectorXd mu;      // J tilted means
  Eigen::VectorXd mu_se;   // Monte Carlo SE per mean
  Eigen::MatrixXd pairwise;     // tau[j,k] = mu_j - mu_k
  Eigen::MatrixXd pairwise_se;  // MC SE of each pairwise contrast
  long draws = 0;

  // Convenience for binary scenarios: effect of the last label vs the first.
  double wate() const { return pairwise(1, 0); }
  double wate_se() const { return pairwise_se(1, 0); }
};

WateOracle true_wate(const Scenario& s, const WeightScheme& scheme, long m_draws,
                     std::uint64_t seed = 202406);

}  // namespace psw
