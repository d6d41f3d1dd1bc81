#include "psw/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "psw/errors.hpp"
#include "psw/rng.hpp"

namespace psw {

namespace {

double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

// d h / d e_k for the differentiable tilting functions.
double tilt_partial(Scheme kind, const Eigen::RowVectorXd& e, double h, int k,
                    int treated) {
  switch (kind) {
    case Scheme::ipw: return 0.0;
    case Scheme::treated: return k == treated ? 1.0 : 0.0;
    case Scheme::overlap: return h * h / (e[k] * e[k]);
    case Scheme::entropy: return -(1.0 + std::log(e[k]));
    case Scheme::matching: break;
  }
  throw fit_error("tilting derivative requested for matching weights");
}

Eigen::VectorXd tilt_row(Scheme kind, const Eigen::MatrixXd& E, int treated) {
  const int n = static_cast<int>(E.rows());
  Eigen::VectorXd h(n);
  for (int i = 0; i < n; ++i) {
    switch (kind) {
      case Scheme::ipw: h[i] = 1.0; break;
      case Scheme::treated: h[i] = E(i, treated); break;
      case Scheme::overlap: h[i] = 1.0 / E.row(i).array().inverse().sum(); break;
      case Scheme::matching: h[i] = E.row(i).minCoeff(); break;
      case Scheme::entropy:
        h[i] = -(E.row(i).array() * E.row(i).array().log()).sum();
        break;
    }
  }
  return h;
}

}  // namespace

StackedSystem::StackedSystem(StackedInputs in) : in_(std::move(in)) {
  const int J = in_.n_groups;
  has_eta_ = in_.means.augmented;
  has_beta_ = in_.ps_internal && in_.scheme.kind != Scheme::matching;
  has_alpha_ = in_.means.augmented && in_.out_internal;
  q_ps_ = has_beta_ ? static_cast<int>(in_.ps_design.cols()) : 0;
  q_out_ = has_alpha_ ? static_cast<int>(in_.out_design.cols()) : 0;

  off_eta_ = J;
  off_beta_ = J + (has_eta_ ? J : 0);
  off_alpha_ = off_beta_ + (has_beta_ ? (J - 1) * q_ps_ : 0);
  dim_ = off_alpha_ + (has_alpha_ ? J * q_out_ : 0);

  if (!in_.ps_internal) {
    adjustments_.push_back(
        "propensity score block dropped (externally estimated propensity scores)");
  } else if (in_.scheme.kind == Scheme::matching) {
    adjustments_.push_back(
        "propensity score block dropped (matching weights: tilting function "
        "not everywhere differentiable)");
  }
  if (in_.means.augmented && !in_.out_internal) {
    adjustments_.push_back(
        "outcome score block dropped (externally estimated potential outcomes)");
  }
}

Eigen::VectorXd StackedSystem::theta_hat() const {
  const int J = in_.n_groups;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim_);
  theta.head(J) = in_.means.nu;
  if (has_eta_) theta.segment(off_eta_, J) = in_.means.eta;
  if (has_beta_) {
    for (int r = 0; r < J - 1; ++r) {
      theta.segment(off_beta_ + r * q_ps_, q_ps_) = in_.ps_coef.row(r).transpose();
    }
  }
  if (has_alpha_) {
    for (int j = 0; j < J; ++j) {
      theta.segment(off_alpha_ + j * q_out_, q_out_) = in_.out_coef.row(j).transpose();
    }
  }
  return theta;
}

Eigen::MatrixXd StackedSystem::propensities_from(const Eigen::MatrixXd& ps_coef) const {
  const int n = n_units();
  const int J = in_.n_groups;
  Eigen::MatrixXd eta = in_.ps_design * ps_coef.transpose();  // n x (J-1)
  Eigen::MatrixXd E(n, J);
  for (int i = 0; i < n; ++i) {
    double mx = 0.0;
    for (int r = 0; r < J - 1; ++r) mx = std::max(mx, eta(i, r));
    double denom = std::exp(-mx);
    for (int r = 0; r < J - 1; ++r) denom += std::exp(eta(i, r) - mx);
    E(i, 0) = std::exp(-mx) / denom;
    for (int r = 0; r < J - 1; ++r) E(i, r + 1) = std::exp(eta(i, r) - mx) / denom;
  }
  return E;
}

Eigen::MatrixXd StackedSystem::outcome_means_from(const Eigen::MatrixXd& out_coef) const {
  const int n = n_units();
  const int J = in_.n_groups;
  Eigen::MatrixXd M(n, J);
  for (int j = 0; j < J; ++j) {
    Eigen::VectorXd eta = in_.out_design * out_coef.row(j).transpose();
    if (in_.out_offset.size()) eta += in_.out_offset;
    switch (in_.out_family) {
      case Family::gaussian: M.col(j) = eta; break;
      case Family::binomial:
        M.col(j) = eta.unaryExpr([](double t) { return sigmoid(t); });
        break;
      case Family::poisson: M.col(j) = eta.array().exp(); break;
    }
  }
  return M;
}

Eigen::MatrixXd StackedSystem::psi_matrix_at(const Eigen::VectorXd& theta) const {
  if (theta.size() != dim_) throw fit_error("stacked system: theta dimension mismatch");
  const int n = n_units();
  const int J = in_.n_groups;

  const Eigen::VectorXd nu = theta.head(J);
  Eigen::VectorXd eta_par;
  if (has_eta_) eta_par = theta.segment(off_eta_, J);

  Eigen::MatrixXd E = in_.e_values;
  if (has_beta_) {
    Eigen::MatrixXd B(J - 1, q_ps_);
    for (int r = 0; r < J - 1; ++r) {
      B.row(r) = theta.segment(off_beta_ + r * q_ps_, q_ps_).transpose();
    }
    E = propensities_from(B);
  }

  Eigen::MatrixXd M;
  if (in_.means.augmented) {
    M = in_.means.m;
    if (has_alpha_) {
      Eigen::MatrixXd Acoef(J, q_out_);
      for (int j = 0; j < J; ++j) {
        Acoef.row(j) = theta.segment(off_alpha_ + j * q_out_, q_out_).transpose();
      }
      M = outcome_means_from(Acoef);
    }
  }

  const int treated = in_.scheme.resolve_treated(J);
  const Eigen::VectorXd h = tilt_row(in_.scheme.kind, E, treated);

  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(n, dim_);
  for (int i = 0; i < n; ++i) {
    const int zi = in_.z_index[i];
    const double w = h[i] / E(i, zi);
    const double m_zi = in_.means.augmented ? M(i, zi) : 0.0;
    psi(i, zi) = w * (in_.y[i] - m_zi - nu[zi]);

    if (has_eta_) {
      for (int j = 0; j < J; ++j) {
        psi(i, off_eta_ + j) = h[i] * (M(i, j) - eta_par[j]);
      }
    }
    if (has_beta_) {
      for (int r = 1; r < J; ++r) {
        const double d = (zi == r ? 1.0 : 0.0) - E(i, r);
        psi.block(i, off_beta_ + (r - 1) * q_ps_, 1, q_ps_) = d * in_.ps_design.row(i);
      }
    }
    if (has_alpha_) {
      psi.block(i, off_alpha_ + zi * q_out_, 1, q_out_) =
          (in_.y[i] - M(i, zi)) * in_.out_design.row(i);
    }
  }
  return psi;
}

Eigen::MatrixXd StackedSystem::jacobian() const {
  const int n = n_units();
  const int J = in_.n_groups;
  const int treated = in_.scheme.resolve_treated(J);

  const Eigen::MatrixXd& E = has_beta_ ? propensities_from(in_.ps_coef) : in_.e_values;
  const Eigen::VectorXd h = tilt_row(in_.scheme.kind, E, treated);

  Eigen::MatrixXd M;
  Eigen::MatrixXd V;  // dmu/deta of the outcome models, n x J
  if (in_.means.augmented) {
    M = has_alpha_ ? outcome_means_from(in_.out_coef) : in_.means.m;
    if (has_alpha_) {
      V.resize(n, J);
      switch (in_.out_family) {
        case Family::gaussian: V.setOnes(); break;
        case Family::binomial: V = M.array() * (1.0 - M.array()); break;
        case Family::poisson: V = M; break;
      }
    }
  }

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim_, dim_);

  for (int i = 0; i < n; ++i) {
    const int zi = in_.z_index[i];
    const double hi = h[i];
    const double e_zi = E(i, zi);
    const double w = hi / e_zi;

    // d nu-block / d nu
    A(zi, zi) -= w;

    if (has_eta_) {
      for (int j = 0; j < J; ++j) A(off_eta_ + j, off_eta_ + j) -= hi;
    }

    if (has_alpha_) {
      // d nu_zi / d alpha_zi : -w * v * x_out
      A.block(zi, off_alpha_ + zi * q_out_, 1, q_out_) -=
          w * V(i, zi) * in_.out_design.row(i);
      // d eta_j / d alpha_j : +h * v_j * x_out
      for (int j = 0; j < J; ++j) {
        A.block(off_eta_ + j, off_alpha_ + j * q_out_, 1, q_out_) +=
            hi * V(i, j) * in_.out_design.row(i);
      }
      // d S_alpha_zi / d alpha_zi : -v * x x'
      A.block(off_alpha_ + zi * q_out_, off_alpha_ + zi * q_out_, q_out_, q_out_) -=
          V(i, zi) * (in_.out_design.row(i).transpose() * in_.out_design.row(i));
    }

    if (has_beta_) {
      // scheme-specific pieces: s_k = dh/de_k and c = sum_k s_k e_k
      Eigen::RowVectorXd s(J);
      for (int k = 0; k < J; ++k) {
        s[k] = tilt_partial(in_.scheme.kind, E.row(i), hi, k, treated);
      }
      const double c = s.dot(E.row(i));

      // For baseline-category logits, de_k/dbeta_l = e_k (d_kl - e_l) x and
      //   dh/dbeta_l    = e_l (s_l - c) x
      //   dw_j/dbeta_l  = [ (e_l/e_j)(s_l - c) - (h/e_j)(d_jl - e_l) ] x
      const Eigen::RowVectorXd& xps = in_.ps_design.row(i);
      const double resid =
          in_.y[i] - (in_.means.augmented ? M(i, zi) : 0.0) - in_.means.nu[zi];
      for (int l = 1; l < J; ++l) {
        const double el = E(i, l);
        const double dw_coef =
            (el / e_zi) * (s[l] - c) - (hi / e_zi) * ((zi == l ? 1.0 : 0.0) - el);
        A.block(zi, off_beta_ + (l - 1) * q_ps_, 1, q_ps_) += resid * dw_coef * xps;

        if (has_eta_) {
          const double dh_coef = el * (s[l] - c);
          for (int j = 0; j < J; ++j) {
            A.block(off_eta_ + j, off_beta_ + (l - 1) * q_ps_, 1, q_ps_) +=
                (M(i, j) - in_.means.eta[j]) * dh_coef * xps;
          }
        }
      }

      // d S_beta / d beta = -(multinomial Fisher information)
      for (int a = 1; a < J; ++a) {
        for (int b = 1; b < J; ++b) {
          const double wf = E(i, a) * ((a == b ? 1.0 : 0.0) - E(i, b));
          A.block(off_beta_ + (a - 1) * q_ps_, off_beta_ + (b - 1) * q_ps_, q_ps_,
                  q_ps_) -= wf * (xps.transpose() * xps);
        }
      }
    }
  }
  return A;
}

Eigen::MatrixXd StackedSystem::mu_gradient() const {
  const int J = in_.n_groups;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(J, dim_);
  for (int j = 0; j < J; ++j) {
    G(j, j) = 1.0;
    if (has_eta_) G(j, off_eta_ + j) = 1.0;
  }
  return G;
}

VarianceResult sandwich_variance(const StackedSystem& sys) {
  const Eigen::MatrixXd psi = sys.psi_matrix();
  const Eigen::MatrixXd B = psi.transpose() * psi;
  const Eigen::MatrixXd A = sys.jacobian();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (!(smin > smax * 1e-12)) {
    std::ostringstream msg;
    msg << "sandwich variance: singular jacobian (condition "
        << (smin > 0 ? smax / smin : std::numeric_limits<double>::infinity()) << ")";
    throw fit_error(msg.str());
  }
  const Eigen::MatrixXd Ainv = svd.matrixV() *
                               svd.singularValues().cwiseInverse().asDiagonal() *
                               svd.matrixU().transpose();
  const Eigen::MatrixXd vtheta = Ainv * B * Ainv.transpose();
  const Eigen::MatrixXd G = sys.mu_gradient();

  VarianceResult out;
  out.method = VarianceResult::Method::sandwich;
  out.vcov_mu = G * vtheta * G.transpose();
  out.vcov_mu = 0.5 * (out.vcov_mu + out.vcov_mu.transpose()).eval();
  out.adjustments = sys.adjustments();
  return out;
}

double normal_quantile_975() { return 1.959963984540054; }

double two_sided_normal_p(double z) {
  return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

namespace {

SummaryRow make_row(const std::string& label, double est, double var) {
  SummaryRow row;
  row.label = label;
  row.estimate = est;
  row.std_error = var > 0.0 ? std::sqrt(var) : 0.0;
  if (row.std_error > 0.0) {
    const double z = normal_quantile_975();
    row.lwr = est - z * row.std_error;
    row.upr = est + z * row.std_error;
    row.p_value = two_sided_normal_p(est / row.std_error);
  } else {
    row.lwr = row.upr = est;
    row.p_value = est == 0.0 ? 1.0 : 0.0;
  }
  return row;
}

Eigen::VectorXd contrast_gradient(const Eigen::VectorXd& a, const Eigen::VectorXd& mu,
                                  Scale scale) {
  Eigen::VectorXd g = a;
  if (scale == Scale::RR) {
    for (int j = 0; j < mu.size(); ++j) g[j] = a[j] / mu[j];
  } else if (scale == Scale::OR) {
    for (int j = 0; j < mu.size(); ++j) g[j] = a[j] / (mu[j] * (1.0 - mu[j]));
  }
  return g;
}

}  // namespace

SummaryTable delta_transform(const VarianceResult& var, const Eigen::VectorXd& mu,
                             const ContrastSpec& contrast) {
  PotentialOutcomeMeans pom;
  pom.mu = mu;
  const Eigen::VectorXd estimates = apply_contrast(pom, contrast);

  SummaryTable table;
  table.scale = contrast.scale;
  table.method = var.method;
  for (int k = 0; k < contrast.coef.rows(); ++k) {
    const Eigen::VectorXd g =
        contrast_gradient(contrast.coef.row(k).transpose(), mu, contrast.scale);
    const double v = g.dot(var.vcov_mu * g);
    table.rows.push_back(make_row(contrast.labels[k], estimates[k], v));
  }
  return table;
}

VarianceResult bootstrap_variance(int n_rows, int n_groups, const ReplicateFn& refit,
                                  int replicates, std::uint64_t seed) {
  if (replicates < 2) throw config_error("bootstrap needs at least 2 replicates");

  std::vector<Eigen::VectorXd> draws;
  draws.reserve(replicates);
  int failed = 0;
  for (int r = 0; r < replicates; ++r) {
    bool ok = false;
    for (int attempt = 0; attempt <= 5 && !ok; ++attempt) {
      Rng rng = Rng::for_replicate(seed, static_cast<std::uint64_t>(r),
                                   static_cast<std::uint64_t>(attempt));
      const std::vector<int> rows = rng.sample_with_replacement(n_rows, n_rows);
      try {
        Eigen::VectorXd mu = refit(rows);
        if (mu.size() != n_groups) {
          throw fit_error("bootstrap replicate returned wrong dimension");
        }
        draws.push_back(std::move(mu));
        ok = true;
      } catch (const fit_error&) {
      } catch (const data_error&) {
      }
    }
    if (!ok) ++failed;
  }
  if (failed * 10 > replicates) {
    throw fit_error("bootstrap aborted: " + std::to_string(failed) + " of " +
                    std::to_string(replicates) + " replicates failed to fit");
  }

  VarianceResult out;
  out.method = VarianceResult::Method::bootstrap;
  out.requested_replicates = replicates;
  out.failed_replicates = failed;
  const int R = static_cast<int>(draws.size());
  out.bootstrap_draws.resize(R, n_groups);
  for (int r = 0; r < R; ++r) out.bootstrap_draws.row(r) = draws[r].transpose();

  const Eigen::RowVectorXd mean = out.bootstrap_draws.colwise().mean();
  const Eigen::MatrixXd centered = out.bootstrap_draws.rowwise() - mean;
  out.vcov_mu = centered.transpose() * centered / (R - 1);
  return out;
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw fit_error("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const int m = static_cast<int>(values.size());
  if (m == 1) return values[0];
  const double hpos = p * (m - 1);
  const int lo = static_cast<int>(std::floor(hpos));
  const int hi = std::min(lo + 1, m - 1);
  const double frac = hpos - lo;
  return values[lo] + frac * (values[hi] - values[lo]);
}

SummaryTable bootstrap_summary(const VarianceResult& var, const Eigen::VectorXd& mu,
                               const ContrastSpec& contrast) {
  PotentialOutcomeMeans pom;
  pom.mu = mu;
  const Eigen::VectorXd estimates = apply_contrast(pom, contrast);
  const int R = static_cast<int>(var.bootstrap_draws.rows());

  SummaryTable table;
  table.scale = contrast.scale;
  table.method = VarianceResult::Method::bootstrap;
  for (int k = 0; k < contrast.coef.rows(); ++k) {
    std::vector<double> tau(R);
    for (int r = 0; r < R; ++r) {
      PotentialOutcomeMeans draw;
      draw.mu = var.bootstrap_draws.row(r).transpose();
      ContrastSpec single;
      single.coef = contrast.coef.row(k);
      single.scale = contrast.scale;
      single.labels = {contrast.labels[k]};
      tau[r] = apply_contrast(draw, single)[0];
    }
    double mean = 0.0;
    for (double t : tau) mean += t;
    mean /= R;
    double ssq = 0.0;
    for (double t : tau) ssq += (t - mean) * (t - mean);
    const double sd = R > 1 ? std::sqrt(ssq / (R - 1)) : 0.0;

    SummaryRow row;
    row.label = contrast.labels[k];
    row.estimate = estimates[k];
    row.std_error = sd;
    row.lwr = empirical_quantile(tau, 0.025);
    row.upr = empirical_quantile(tau, 0.975);
    row.p_value = sd > 0.0 ? two_sided_normal_p(estimates[k] / sd)
                           : (estimates[k] == 0.0 ? 1.0 : 0.0);
    table.rows.push_back(row);
  }
  return table;
}

SummaryTable exponentiate(const SummaryTable& table) {
  if (table.scale == Scale::DIF) {
    throw config_error("exponentiation applies to RR/OR (log-scale) summaries only");
  }
  SummaryTable out = table;
  out.exponentiated = true;
  for (auto& row : out.rows) {
    row.estimate = std::exp(row.estimate);
    row.lwr = std::exp(row.lwr);
    row.upr = std::exp(row.upr);
  }
  return out;
}

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string fmt_p(double p) {
  if (p < 2.2e-16) return "< 2.2e-16";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", p);
  return buf;
}

const char* stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  if (p < 0.1) return ".";
  return "";
}

}  // namespace

std::string render_summary(const SummaryTable& table, const ContrastSpec& contrast,
                           const std::vector<std::string>& group_labels,
                           bool show_ci) {
  std::ostringstream os;
  os << (table.method == VarianceResult::Method::sandwich ? "Closed-form inference:"
                                                          : "Bootstrap inference:")
     << "\n\n";
  if (table.scale != Scale::DIF) {
    os << "Inference in log scale:\n";
  }
  os << "Original group value: ";
  for (size_t j = 0; j < group_labels.size(); ++j) {
    os << (j ? ", " : " ") << group_labels[j];
  }
  os << "\n\nContrast:\n";

  size_t label_w = 8;
  for (const auto& row : table.rows) label_w = std::max(label_w, row.label.size());
  os << std::setw(static_cast<int>(label_w)) << "";
  for (const auto& g : group_labels) {
    os << " " << std::setw(static_cast<int>(std::max(g.size(), size_t(4)))) << g;
  }
  os << "\n";
  for (int k = 0; k < contrast.coef.rows(); ++k) {
    os << std::setw(static_cast<int>(label_w)) << std::left << table.rows[k].label
       << std::right;
    for (size_t j = 0; j < group_labels.size(); ++j) {
      std::ostringstream c;
      c << contrast.coef(k, static_cast<int>(j));
      os << " " << std::setw(static_cast<int>(std::max(group_labels[j].size(), size_t(4))))
         << c.str();
    }
    os << "\n";
  }

  os << "\n" << std::setw(static_cast<int>(label_w)) << "";
  if (show_ci) {
    os << "  " << std::setw(10) << "Estimate" << " " << std::setw(10) << "Std.Error"
       << " " << std::setw(10) << "lwr" << " " << std::setw(10) << "upr" << "  "
       << std::setw(10) << "Pr(>|z|)" << "\n";
  } else {
    os << "  " << std::setw(10) << "Estimate" << " " << std::setw(10) << "Std.Error"
       << " " << std::setw(10) << "z value" << "  " << std::setw(10) << "Pr(>|z|)"
       << "\n";
  }
  for (const auto& row : table.rows) {
    os << std::setw(static_cast<int>(label_w)) << std::left << row.label << std::right
       << "  " << std::setw(10) << fmt(row.estimate) << " " << std::setw(10)
       << fmt(row.std_error);
    if (show_ci) {
      os << " " << std::setw(10) << fmt(row.lwr) << " " << std::setw(10)
         << fmt(row.upr);
    } else {
      const double z = row.std_error > 0.0 ? row.estimate / row.std_error : 0.0;
      os << " " << std::setw(10) << fmt(z, "%.3f");
    }
    os << "  " << std::setw(10) << fmt_p(row.p_value) << " " << stars(row.p_value)
       << "\n";
  }
  os << "---\n"
     << "Signif. codes:  0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1\n";
  return os.str();
}

}  // namespace psw
