#include "psw/weights.hpp"

#include <cmath>

#include "psw/errors.hpp"

namespace psw {

Scheme scheme_from_string(const std::string& name) {
  if (name == "ipw") return Scheme::ipw;
  if (name == "treated") return Scheme::treated;
  if (name == "overlap") return Scheme::overlap;
  if (name == "matching") return Scheme::matching;
  if (name == "entropy") return Scheme::entropy;
  throw config_error("unknown weight scheme '" + name +
                     "' (expected ipw, treated, overlap, matching or entropy)");
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::ipw: return "ipw";
    case Scheme::treated: return "treated";
    case Scheme::overlap: return "overlap";
    case Scheme::matching: return "matching";
    case Scheme::entropy: return "entropy";
  }
  return "?";
}

PropensityMatrix::PropensityMatrix(Eigen::MatrixXd values,
                                   std::vector<std::string> labels, Source source)
    : values_(std::move(values)), labels_(std::move(labels)), source_(source) {
  const int n = static_cast<int>(values_.rows());
  const int J = static_cast<int>(values_.cols());
  if (J < 2) throw data_error("propensity matrix needs at least two groups");
  if (static_cast<int>(labels_.size()) != J) {
    throw data_error("propensity matrix: label count does not match columns");
  }
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < J; ++j) {
      const double e = values_(i, j);
      if (!(e > 0.0) || !(e < 1.0)) {
        throw data_error("propensity score outside (0,1) at row " +
                         std::to_string(i + 1) + ", group '" + labels_[j] + "'");
      }
      sum += e;
    }
    if (std::fabs(sum - 1.0) > 1e-8) {
      throw data_error("propensity scores at row " + std::to_string(i + 1) +
                       " sum to " + std::to_string(sum) + ", expected 1");
    }
  }
  // clamp extremes for downstream weight stability, then renormalize rows
  const double hi = 1.0 - kClampLo;
  for (int i = 0; i < n; ++i) {
    bool touched = false;
    for (int j = 0; j < J; ++j) {
      double& e = values_(i, j);
      if (e < kClampLo) { e = kClampLo; ++clamp_count_; touched = true; }
      else if (e > hi) { e = hi; ++clamp_count_; touched = true; }
    }
    if (touched) values_.row(i) /= values_.row(i).sum();
  }
}

Eigen::VectorXd tilting(const WeightScheme& scheme, const PropensityMatrix& e) {
  const auto& E = e.values();
  const int n = e.rows();
  const int J = e.groups();
  Eigen::VectorXd h(n);
  switch (scheme.kind) {
    case Scheme::ipw:
      h.setOnes();
      break;
    case Scheme::treated: {
      const int t = scheme.resolve_treated(J);
      if (t < 0 || t >= J) throw config_error("treated group index out of range");
      h = E.col(t);
      break;
    }
    case Scheme::overlap:
      h = E.array().inverse().rowwise().sum().inverse();
      break;
    case Scheme::matching:
      h = E.rowwise().minCoeff();
      break;
    case Scheme::entropy:
      h = -(E.array() * E.array().log()).rowwise().sum();
      break;
  }
  return h;
}

TiltedWeights unit_weights(const WeightScheme& scheme, const PropensityMatrix& e,
                           const std::vector<int>& z_index) {
  const int n = e.rows();
  if (static_cast<int>(z_index.size()) != n) {
    throw data_error("unit_weights: treatment index length mismatch");
  }
  TiltedWeights tw;
  tw.scheme = scheme;
  tw.clamp_count = e.clamp_count();
  tw.h = tilting(scheme, e);
  tw.w.resize(n);
  for (int i = 0; i < n; ++i) {
    const int j = z_index[i];
    if (j < 0 || j >= e.groups()) {
      throw data_error("unit_weights: treatment label outside the propensity groups");
    }
    tw.w[i] = tw.h[i] / e.values()(i, j);
  }
  return tw;
}

Eigen::VectorXd effective_sample_size(const TiltedWeights& tw,
                                      const std::vector<int>& z_index,
                                      int n_groups) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n_groups);
  Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(n_groups);
  for (size_t i = 0; i < z_index.size(); ++i) {
    const double w = tw.w[static_cast<int>(i)];
    sum[z_index[i]] += w;
    sumsq[z_index[i]] += w * w;
  }
  Eigen::VectorXd ess(n_groups);
  for (int j = 0; j < n_groups; ++j) {
    if (sumsq[j] <= 0.0) throw data_error("effective sample size: empty group");
    ess[j] = sum[j] * sum[j] / sumsq[j];
  }
  return ess;
}

}  // namespace psw
