#include "psw/balance.hpp"

#include <algorithm>
#include <cmath>

#include "psw/errors.hpp"

namespace psw {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<char> group_mask(const std::vector<int>& z_index, int g) {
  std::vector<char> mask(z_index.size(), 0);
  for (size_t i = 0; i < z_index.size(); ++i) mask[i] = z_index[i] == g ? 1 : 0;
  return mask;
}

double pooled_sd_pair(double va, double vb) {
  const double pooled = 0.5 * (va + vb);
  return pooled > 0.0 ? std::sqrt(pooled) : 0.0;
}

}  // namespace

Moments weighted_moments(const Eigen::VectorXd& x, const Eigen::VectorXd& w,
                         const std::vector<char>& mask) {
  if (x.size() != w.size() || (!mask.empty() && mask.size() != static_cast<size_t>(x.size()))) {
    throw data_error("weighted_moments: length mismatch");
  }
  double sw = 0.0, swx = 0.0, sw2 = 0.0;
  int count = 0;
  for (int i = 0; i < x.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    ++count;
    sw += w[i];
    sw2 += w[i] * w[i];
    swx += w[i] * x[i];
  }
  if (count == 0) throw data_error("weighted_moments: empty group");
  if (!(sw > 0.0)) throw data_error("weighted_moments: zero total weight");

  Moments m;
  m.mean = swx / sw;
  double ssq = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const double d = x[i] - m.mean;
    ssq += w[i] * d * d;
  }
  const double denom = sw * sw - sw2;
  if (denom > 0.0) {
    m.variance = ssq * sw / denom;
  } else {
    // a single effective observation: variance undefined unless trivially 0
    m.variance = ssq == 0.0 ? 0.0 : kNaN;
  }
  return m;
}

namespace {

// group means/variances under the scheme's weights (or unweighted)
void group_moments(const Eigen::VectorXd& x, const TiltedWeights& tw,
                   const std::vector<int>& z_index, int n_groups,
                   bool weighted_var, Eigen::VectorXd& means,
                   Eigen::VectorXd& vars) {
  means.resize(n_groups);
  vars.resize(n_groups);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(x.size());
  for (int g = 0; g < n_groups; ++g) {
    const auto mask = group_mask(z_index, g);
    const Moments wm = weighted_moments(x, tw.w, mask);
    means[g] = wm.mean;
    vars[g] = weighted_var ? wm.variance : weighted_moments(x, ones, mask).variance;
  }
}

}  // namespace

double asd(const Eigen::VectorXd& x, const TiltedWeights& tw,
           const std::vector<int>& z_index, int group_a, int group_b,
           bool weighted_var) {
  const int J = std::max(group_a, group_b) + 1;
  Eigen::VectorXd means, vars;
  group_moments(x, tw, z_index, J, weighted_var, means, vars);
  const double sd = pooled_sd_pair(vars[group_a], vars[group_b]);
  if (!(sd > 0.0) || std::isnan(sd)) return kNaN;
  return std::fabs(means[group_a] - means[group_b]) / sd;
}

double psd(const Eigen::VectorXd& x, const TiltedWeights& tw,
           const std::vector<int>& z_index, int n_groups, bool weighted_var) {
  Eigen::VectorXd means, vars;
  group_moments(x, tw, z_index, n_groups, weighted_var, means, vars);

  const double sh = tw.h.sum();
  if (!(sh > 0.0)) throw data_error("psd: zero total tilting mass");
  const double target = tw.h.dot(x) / sh;

  double pooled;
  if (n_groups == 2) {
    pooled = 0.5 * (vars[0] + vars[1]);
  } else {
    pooled = vars.sum() / n_groups;
  }
  const double sd = pooled > 0.0 ? std::sqrt(pooled) : 0.0;
  if (!(sd > 0.0) || std::isnan(sd)) return kNaN;

  double worst = 0.0;
  for (int g = 0; g < n_groups; ++g) {
    worst = std::max(worst, std::fabs(means[g] - target) / sd);
  }
  return worst;
}

BalanceReport summarize_balance(const DesignMatrix& covariates,
                                const PropensityMatrix& e,
                                const std::vector<WeightScheme>& schemes,
                                const std::vector<int>& z_index,
                                const BalanceOptions& options) {
  if (schemes.empty()) throw config_error("summarize_balance: no schemes requested");
  const int n = covariates.rows();
  if (e.rows() != n || static_cast<int>(z_index.size()) != n) {
    throw data_error("summarize_balance: input sizes disagree");
  }
  const int J = e.groups();

  BalanceReport report;
  report.options = options;
  report.group_labels = e.group_labels();
  report.group_sizes.assign(J, 0);
  for (int g : z_index) ++report.group_sizes[g];
  report.clamp_count = e.clamp_count();

  const int first_cov = covariates.has_intercept ? 1 : 0;
  for (int c = first_cov; c < covariates.cols(); ++c) {
    report.covariates.push_back(covariates.column_names[c]);
  }

  // unweighted baseline, then each requested scheme
  std::vector<std::pair<std::string, TiltedWeights>> weight_sets;
  {
    TiltedWeights unweighted;
    unweighted.h = Eigen::VectorXd::Ones(n);
    unweighted.w = Eigen::VectorXd::Ones(n);
    unweighted.scheme = WeightScheme{Scheme::ipw, -1};
    weight_sets.emplace_back("unweighted", std::move(unweighted));
  }
  for (const auto& s : schemes) {
    weight_sets.emplace_back(to_string(s.kind), unit_weights(s, e, z_index));
  }

  for (const auto& [name, tw] : weight_sets) {
    SchemeBalance entry;
    entry.scheme_name = name;
    const int n_cov = static_cast<int>(report.covariates.size());
    entry.means.resize(n_cov, J);
    entry.vars.resize(n_cov, J);
    entry.asd.resize(n_cov);
    entry.psd.resize(n_cov);
    entry.ess = effective_sample_size(tw, z_index, J);

    for (int c = 0; c < n_cov; ++c) {
      const Eigen::VectorXd x = covariates.values.col(first_cov + c);
      Eigen::VectorXd means, vars;
      group_moments(x, tw, z_index, J, options.weighted_var, means, vars);
      entry.means.row(c) = means.transpose();
      entry.vars.row(c) = vars.transpose();

      double worst_asd = 0.0;
      bool undefined = false;
      for (int a = 0; a < J && !undefined; ++a) {
        for (int b = a + 1; b < J; ++b) {
          const double v = asd(x, tw, z_index, a, b, options.weighted_var);
          if (std::isnan(v)) { undefined = true; break; }
          worst_asd = std::max(worst_asd, v);
        }
      }
      entry.asd[c] = undefined ? kNaN : worst_asd;
      entry.psd[c] = psd(x, tw, z_index, J, options.weighted_var);

      const double metric = options.metric == "PSD" ? entry.psd[c] : entry.asd[c];
      if (!std::isnan(metric) && metric > options.threshold) {
        entry.flagged.push_back(report.covariates[c]);
      }
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

LoveSeries love_series(const BalanceReport& report) {
  LoveSeries s;
  s.covariates = report.covariates;
  s.threshold = report.options.threshold;
  s.metric = report.options.metric;
  s.values.resize(static_cast<int>(report.covariates.size()),
                  static_cast<int>(report.entries.size()));
  for (size_t e = 0; e < report.entries.size(); ++e) {
    s.schemes.push_back(report.entries[e].scheme_name);
    s.values.col(static_cast<int>(e)) =
        s.metric == "PSD" ? report.entries[e].psd : report.entries[e].asd;
  }
  return s;
}

DensitySeries density_series(const PropensityMatrix& e,
                             const std::vector<int>& z_index) {
  constexpr int kGrid = 512;
  DensitySeries out;
  out.grid.resize(kGrid);
  for (int t = 0; t < kGrid; ++t) out.grid[t] = static_cast<double>(t) / (kGrid - 1);

  const int J = e.groups();
  for (int col = 0; col < J; ++col) {
    for (int g = 0; g < J; ++g) {
      std::vector<double> values;
      for (int i = 0; i < e.rows(); ++i) {
        if (z_index[i] == g) values.push_back(e.values()(i, col));
      }
      if (values.empty()) continue;

      // Gaussian kernel, Silverman bandwidth with a floor so degenerate
      // samples still render; renormalized on the grid so the trapezoid
      // integral is 1 despite boundary mass loss.
      const int m = static_cast<int>(values.size());
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= m;
      double sd = 0.0;
      for (double v : values) sd += (v - mean) * (v - mean);
      sd = m > 1 ? std::sqrt(sd / (m - 1)) : 0.0;
      std::vector<double> sorted = values;
      std::sort(sorted.begin(), sorted.end());
      const double q1 = sorted[static_cast<size_t>(0.25 * (m - 1))];
      const double q3 = sorted[static_cast<size_t>(0.75 * (m - 1))];
      const double iqr = q3 - q1;
      double spread = sd;
      if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
      double bw = 0.9 * spread * std::pow(static_cast<double>(m), -0.2);
      bw = std::max(bw, 0.005);

      DensitySeries::Curve curve;
      curve.ps_column = e.group_labels()[col];
      curve.group = e.group_labels()[g];
      curve.density.resize(kGrid);
      const double norm = 1.0 / (m * bw * std::sqrt(2.0 * M_PI));
      for (int t = 0; t < kGrid; ++t) {
        double acc = 0.0;
        for (double v : values) {
          const double u = (out.grid[t] - v) / bw;
          acc += std::exp(-0.5 * u * u);
        }
        curve.density[t] = norm * acc;
      }
      double integral = 0.0;
      const double dx = out.grid[1] - out.grid[0];
      for (int t = 1; t < kGrid; ++t) {
        integral += 0.5 * (curve.density[t] + curve.density[t - 1]) * dx;
      }
      if (integral > 0.0) curve.density /= integral;
      out.curves.push_back(std::move(curve));
    }
  }
  return out;
}

HistogramSeries histogram_series(const PropensityMatrix& e,
                                 const std::vector<int>& z_index,
                                 int treated_index) {
  if (e.groups() != 2) {
    throw config_error("histogram plots are only available for binary treatments");
  }
  constexpr int kBins = 30;
  const int col = treated_index >= 0 ? treated_index : e.groups() - 1;

  HistogramSeries out;
  out.bin_edges.resize(kBins + 1);
  for (int b = 0; b <= kBins; ++b) out.bin_edges[b] = static_cast<double>(b) / kBins;

  for (int g = 0; g < e.groups(); ++g) {
    HistogramSeries::Bars bars;
    bars.group = e.group_labels()[g];
    bars.counts = Eigen::VectorXi::Zero(kBins);
    for (int i = 0; i < e.rows(); ++i) {
      if (z_index[i] != g) continue;
      int b = static_cast<int>(e.values()(i, col) * kBins);
      b = std::clamp(b, 0, kBins - 1);
      ++bars.counts[b];
    }
    out.groups.push_back(std::move(bars));
  }
  return out;
}

}  // namespace psw
