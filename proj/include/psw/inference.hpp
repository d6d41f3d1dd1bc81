#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "psw/estimation.hpp"
#include "psw/glm.hpp"
#include "psw/weights.hpp"

namespace psw {

// Everything the stacked estimating-equation system needs. The propensity
// model is always carried in baseline-category form: ps_coef is (J-1) x q
// with the binary logistic fit occupying the single row (level order is
// lexicographic, baseline first).
struct StackedInputs {
  Eigen::VectorXd y;
  std::vector<int> z_index;
  int n_groups = 0;
  WeightScheme scheme;
  Eigen::MatrixXd e_values;  // N x J propensities used by the pipeline
  PotentialOutcomeMeans means;

  Eigen::MatrixXd ps_design;  // N x q_ps (internal fits only)
  Eigen::MatrixXd ps_coef;    // (J-1) x q_ps
  bool ps_internal = false;

  Eigen::MatrixXd out_design;  // N x q_out (augmented internal fits only)
  Eigen::MatrixXd out_coef;    // J x q_out, one row per group model
  bool out_internal = false;
  Family out_family = Family::gaussian;
  Eigen::VectorXd out_offset;  // size 0 = none
};

// Stacked per-unit estimating functions Psi_i(theta) for
// theta = (nu_1..nu_J [, eta_1..eta_J] [, beta] [, alpha_1..alpha_J]).
// The beta block is dropped for externally supplied propensities and for
// matching weights (non-differentiable tilting); the alpha block is dropped
// for externally supplied potential outcomes.
class StackedSystem {
 public:
  explicit StackedSystem(StackedInputs in);

  int dim() const { return dim_; }
  int n_units() const { return static_cast<int>(in_.y.size()); }
  bool has_eta() const { return has_eta_; }
  bool has_beta() const { return has_beta_; }
  bool has_alpha() const { return has_alpha_; }

  Eigen::VectorXd theta_hat() const;
  // Psi rows at arbitrary theta (nuisance pieces recomputed from the
  // parameter blocks present); N x dim.
  Eigen::MatrixXd psi_matrix_at(const Eigen::VectorXd& theta) const;
  Eigen::MatrixXd psi_matrix() const { return psi_matrix_at(theta_hat()); }
  // Analytic A = sum_i dPsi_i/dtheta' at theta_hat.
  Eigen::MatrixXd jacobian() const;
  // Gradient of mu w.r.t. theta: mu_j = nu_j (+ eta_j). J x dim.
  Eigen::MatrixXd mu_gradient() const;
  const std::vector<std::string>& adjustments() const { return adjustments_; }

 private:
  StackedInputs in_;
  int dim_ = 0;
  bool has_eta_ = false, has_beta_ = false, has_alpha_ = false;
  int off_eta_ = 0, off_beta_ = 0, off_alpha_ = 0;
  int q_ps_ = 0, q_out_ = 0;
  std::vector<std::string> adjustments_;

  Eigen::MatrixXd propensities_from(const Eigen::MatrixXd& ps_coef) const;
  Eigen::MatrixXd outcome_means_from(const Eigen::MatrixXd& out_coef) const;
};

struct VarianceResult {
  enum class Method { sandwich, bootstrap };
  Eigen::MatrixXd vcov_mu;  // J x J
  Method method = Method::sandwich;
  std::vector<std::string> adjustments;
  Eigen::MatrixXd bootstrap_draws;  // successful replicates x J
  int requested_replicates = 0;
  int failed_replicates = 0;
};

// Empirical sandwich A^-1 B A^-T with B = sum Psi Psi'; the mu block is
// extracted through mu_j = nu_j (+ eta_j). Errors on a numerically singular
// jacobian with condition diagnostics.
VarianceResult sandwich_variance(const StackedSystem& sys);

struct SummaryRow {
  std::string label;
  double estimate = 0.0;
  double std_error = 0.0;
  double lwr = 0.0;
  double upr = 0.0;
  double p_value = 1.0;
};

struct SummaryTable {
  std::vector<SummaryRow> rows;
  Scale scale = Scale::DIF;
  bool exponentiated = false;
  VarianceResult::Method method = VarianceResult::Method::sandwich;
};

// Delta-method transform of the joint vcov of mu to the contrast scale with
// symmetric normal intervals and two-sided normal p-values. Gradients:
// DIF a_j; RR a_j/mu_j; OR a_j/[mu_j(1-mu_j)].
SummaryTable delta_transform(const VarianceResult& var, const Eigen::VectorXd& mu,
                             const ContrastSpec& contrast);

// Re-estimates mu on resampled rows; throws fit_error on replicate failure.
using ReplicateFn = std::function<Eigen::VectorXd(const std::vector<int>& rows)>;

// Resamples n rows with replacement R times, rerunning the full pipeline per
// replicate. Per-replicate streams derive from (seed, replicate, attempt), so
// results do not depend on execution order. A failing replicate is redrawn up
// to 5 times then counted; more than 10% failures aborts.
VarianceResult bootstrap_variance(int n_rows, int n_groups, const ReplicateFn& refit,
                                  int replicates, std::uint64_t seed);

// Percentile-interval summary of bootstrap draws: SE is the sample sd of the
// transformed draws, the CI the 2.5%/97.5% empirical quantiles (linear
// interpolation between order statistics), the p-value a normal approximation
// at the full-data point estimate.
SummaryTable bootstrap_summary(const VarianceResult& var, const Eigen::VectorXd& mu,
                               const ContrastSpec& contrast);

// exp-transforms estimate and interval of a log-scale (RR/OR) table.
SummaryTable exponentiate(const SummaryTable& table);

// Aligned text table mirroring the printed output format; with show_ci =
// false the z statistic replaces the interval columns.
std::string render_summary(const SummaryTable& table, const ContrastSpec& contrast,
                           const std::vector<std::string>& group_labels,
                           bool show_ci);

double normal_quantile_975();
double two_sided_normal_p(double z);
double empirical_quantile(std::vector<double> values, double p);

}  // namespace psw
