#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psw/design.hpp"
#include "psw/trimming.hpp"
#include "psw/weights.hpp"

namespace psw {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // NaN when undefined (single effective observation)
};

// Weighted mean and variance over the masked units. The variance uses the
// reliability-weight unbiased form  sum w (x - m)^2 * sum w / ((sum w)^2 - sum w^2),
// which reduces to the n-1 divisor when w is constant.
Moments weighted_moments(const Eigen::VectorXd& x, const Eigen::VectorXd& w,
                         const std::vector<char>& mask);

// Absolute standardized difference between groups a and b:
// |mean_a - mean_b| / sqrt((s_a^2 + s_b^2)/2). Variances are weighted or
// unweighted per the flag. Returns NaN (the undefined sentinel) when the
// pooled variance is zero.
double asd(const Eigen::VectorXd& x, const TiltedWeights& tw,
           const std::vector<int>& z_index, int group_a, int group_b,
           bool weighted_var);

// Target population standardized difference, max over groups of
// |weighted group mean - tilted target mean| / pooled sd. The pooled sd is
// sqrt((s_a^2+s_b^2)/2) for two groups and sqrt(sum_j s_j^2 / J) for more.
double psd(const Eigen::VectorXd& x, const TiltedWeights& tw,
           const std::vector<int>& z_index, int n_groups, bool weighted_var);

struct BalanceOptions {
  bool weighted_var = true;
  std::string metric = "ASD";  // ASD | PSD
  double threshold = 0.1;
};

struct SchemeBalance {
  std::string scheme_name;  // "unweighted" or a scheme name
  Eigen::MatrixXd means;    // covariate x group
  Eigen::MatrixXd vars;     // covariate x group
  Eigen::VectorXd asd;      // per covariate; max over pairs for J >= 3
  Eigen::VectorXd psd;      // per covariate; max over groups
  Eigen::VectorXd ess;      // per group
  std::vector<std::string> flagged;  // covariates with chosen metric > threshold
};

struct BalanceReport {
  std::vector<std::string> covariates;
  std::vector<std::string> group_labels;
  std::vector<int> group_sizes;
  std::vector<SchemeBalance> entries;  // unweighted first, then each scheme
  BalanceOptions options;
  std::optional<TrimResult> trim;
  int clamp_count = 0;
};

// Balance over every non-intercept design column: weighted means/variances
// by group, ASD and PSD per scheme plus the unweighted baseline, effective
// sample sizes, and metric flags at the threshold.
BalanceReport summarize_balance(const DesignMatrix& covariates,
                                const PropensityMatrix& e,
                                const std::vector<WeightScheme>& schemes,
                                const std::vector<int>& z_index,
                                const BalanceOptions& options = {});

// Data series behind the three plot types.
struct LoveSeries {
  std::vector<std::string> covariates;
  std::vector<std::string> schemes;
  Eigen::MatrixXd values;  // covariate x scheme, chosen metric
  double threshold = 0.1;
  std::string metric = "ASD";
};

struct DensitySeries {
  Eigen::VectorXd grid;  // 512 points on [0,1]
  struct Curve {
    std::string ps_column;  // propensity column label
    std::string group;      // treatment group label
    Eigen::VectorXd density;
  };
  std::vector<Curve> curves;
};

struct HistogramSeries {
  Eigen::VectorXd bin_edges;  // 31 edges for 30 equal bins on [0,1]
  struct Bars {
    std::string group;
    Eigen::VectorXi counts;
  };
  std::vector<Bars> groups;
};

LoveSeries love_series(const BalanceReport& report);
DensitySeries density_series(const PropensityMatrix& e,
                             const std::vector<int>& z_index);
// Binary treatments only; bins the propensity of the treated-group column.
HistogramSeries histogram_series(const PropensityMatrix& e,
                                 const std::vector<int>& z_index,
                                 int treated_index = -1);

}  // namespace psw
