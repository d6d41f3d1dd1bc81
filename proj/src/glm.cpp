#include "psw/glm.hpp"

#include <cmath>

#include "psw/errors.hpp"

namespace psw {

namespace {

double softplus(double t) {  // log(1 + e^t), overflow-safe
  return t > 30.0 ? t : std::log1p(std::exp(t));
}

double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

void check_rank(const Eigen::MatrixXd& X, const char* what) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols()) {
    throw fit_error(std::string(what) + ": design matrix is rank deficient (" +
                    std::to_string(qr.rank()) + " < " + std::to_string(X.cols()) + ")");
  }
}

// Weighted least squares beta for sqrt(w)-scaled rows.
Eigen::VectorXd wls(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& w) {
  const Eigen::VectorXd sw = w.array().sqrt();
  const Eigen::MatrixXd Xw = sw.asDiagonal() * X;
  const Eigen::VectorXd zw = sw.cwiseProduct(z);
  return Xw.colPivHouseholderQr().solve(zw);
}

double binomial_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  double dev = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    // -2 [ y log mu + (1-y) log(1-mu) ] written through softplus for stability
    dev += 2.0 * (softplus(eta[i]) - y[i] * eta[i]);
  }
  return dev;
}

double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  double dev = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    const double mu = std::exp(eta[i]);
    const double ylogy = y[i] > 0.0 ? y[i] * std::log(y[i] / mu) : 0.0;
    dev += 2.0 * (ylogy - (y[i] - mu));
  }
  return dev;
}

struct IrlsProblem {
  Family family;
  const Eigen::MatrixXd& X;     // likelihood rows only
  const Eigen::VectorXd& y;    // likelihood rows only
  Eigen::VectorXd offset;      // size 0 = none (poisson only)

  double deviance(const Eigen::VectorXd& eta) const {
    return family == Family::binomial ? binomial_deviance(y, eta)
                                      : poisson_deviance(y, eta);
  }

  Eigen::VectorXd mean(const Eigen::VectorXd& eta) const {
    if (family == Family::binomial)
      return eta.unaryExpr([](double t) { return sigmoid(t); });
    return eta.array().exp();
  }

  Eigen::VectorXd linear(const Eigen::VectorXd& beta) const {
    Eigen::VectorXd eta = X * beta;
    if (offset.size()) eta += offset;
    return eta;
  }
};

// Shared IRLS driver for binomial and poisson likelihoods. Convergence
// requires a small relative deviance change AND a near-zero total score AND
// linear predictors inside the guard band; separation therefore runs to the
// iteration cap and errors out.
struct IrlsResult {
  Eigen::VectorXd beta;
  int iterations;
};

IrlsResult run_irls(const IrlsProblem& prob, Eigen::VectorXd beta,
                    const GlmOptions& opts, const char* what) {
  Eigen::VectorXd eta = prob.linear(beta);
  double dev = prob.deviance(eta);

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    const Eigen::VectorXd mu = prob.mean(eta);
    Eigen::VectorXd w(mu.size());
    Eigen::VectorXd zwork(mu.size());
    for (int i = 0; i < mu.size(); ++i) {
      const double v = prob.family == Family::binomial ? mu[i] * (1.0 - mu[i]) : mu[i];
      const double vf = std::max(v, 1e-10);
      w[i] = vf;
      const double base = prob.offset.size() ? eta[i] - prob.offset[i] : eta[i];
      zwork[i] = base + (prob.y[i] - mu[i]) / vf;
    }

    Eigen::VectorXd beta_new = wls(prob.X, zwork, w);
    Eigen::VectorXd eta_new = prob.linear(beta_new);
    double dev_new = prob.deviance(eta_new);

    for (int h = 0; h < opts.max_step_halvings && !(dev_new <= dev); ++h) {
      beta_new = 0.5 * (beta + beta_new);
      eta_new = prob.linear(beta_new);
      dev_new = prob.deviance(eta_new);
    }

    const double rel = std::fabs(dev_new - dev) / (std::fabs(dev_new) + 0.1);
    beta = beta_new;
    eta = eta_new;
    dev = dev_new;

    if (rel < opts.deviance_tol) {
      const Eigen::VectorXd score = prob.X.transpose() * (prob.y - prob.mean(eta));
      const bool score_ok = score.lpNorm<Eigen::Infinity>() < opts.score_tol;
      const bool eta_ok = eta.lpNorm<Eigen::Infinity>() <= opts.eta_guard;
      if (score_ok && eta_ok) return {beta, iter};
      // deviance has flattened but the solution is drifting to the boundary:
      // keep iterating so separation is reported at the cap
    }
  }
  throw fit_error(std::string(what) +
                  ": no convergence after " + std::to_string(opts.max_iterations) +
                  " iterations (possible separation or degenerate design)");
}

std::vector<int> subset_rows(const std::vector<char>& subset, int n) {
  std::vector<int> rows;
  if (subset.empty()) {
    rows.resize(n);
    for (int i = 0; i < n; ++i) rows[i] = i;
  } else {
    for (int i = 0; i < n; ++i)
      if (subset[i]) rows.push_back(i);
  }
  return rows;
}

}  // namespace

Family family_from_string(const std::string& name) {
  if (name == "gaussian") return Family::gaussian;
  if (name == "binomial") return Family::binomial;
  if (name == "poisson") return Family::poisson;
  throw config_error("unknown family '" + name +
                     "' (expected gaussian, binomial or poisson)");
}

std::string to_string(Family f) {
  switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::binomial: return "binomial";
    case Family::poisson: return "poisson";
  }
  return "?";
}

Eigen::VectorXd GlmFit::mean_derivative() const {
  switch (family) {
    case Family::gaussian: return Eigen::VectorXd::Ones(fitted.size());
    case Family::binomial: return fitted.array() * (1.0 - fitted.array());
    case Family::poisson: return fitted;
  }
  return {};
}

Eigen::MatrixXd GlmFit::score_matrix() const {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(X.rows(), X.cols());
  for (int i = 0; i < X.rows(); ++i) {
    if (!in_subset(i)) continue;
    S.row(i) = (y[i] - fitted[i]) * X.row(i);
  }
  return S;
}

Eigen::VectorXd GlmFit::score(int i) const {
  if (!in_subset(i)) return Eigen::VectorXd::Zero(X.cols());
  return (y[i] - fitted[i]) * X.row(i).transpose();
}

Eigen::MatrixXd GlmFit::information() const {
  const Eigen::VectorXd v = mean_derivative();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  for (int i = 0; i < X.rows(); ++i) {
    if (!in_subset(i)) continue;
    info.noalias() += v[i] * (X.row(i).transpose() * X.row(i));
  }
  return info;
}

GlmFit fit_binary_logistic(const DesignMatrix& X, const Eigen::VectorXd& z,
                           const GlmOptions& opts) {
  const int n = X.rows();
  const int q = X.cols();
  if (z.size() != n) throw data_error("logistic fit: response length mismatch");
  for (int i = 0; i < n; ++i) {
    if (z[i] != 0.0 && z[i] != 1.0)
      throw data_error("logistic fit: response must be 0/1");
  }
  const double ones = z.sum();
  if (ones == 0.0 || ones == static_cast<double>(n)) {
    throw data_error("logistic fit: both classes must be present");
  }
  if (n <= q) throw data_error("logistic fit: need more observations than columns");
  check_rank(X.values, "logistic fit");

  IrlsProblem prob{Family::binomial, X.values, z, Eigen::VectorXd()};
  IrlsResult res = run_irls(prob, Eigen::VectorXd::Zero(q), opts, "logistic fit");

  GlmFit fit;
  fit.family = Family::binomial;
  fit.coefficients = res.beta;
  fit.eta = X.values * res.beta;
  fit.fitted = fit.eta.unaryExpr([](double t) { return sigmoid(t); });
  fit.converged = true;
  fit.iterations = res.iterations;
  fit.deviance = binomial_deviance(z, fit.eta);
  fit.X = X.values;
  fit.y = z;
  return fit;
}

GlmFit fit_outcome_glm(const DesignMatrix& X, const Eigen::VectorXd& y,
                       Family family, const std::vector<char>& subset,
                       const Eigen::VectorXd& offset, const GlmOptions& opts) {
  const int n = X.rows();
  const int q = X.cols();
  if (y.size() != n) throw data_error("outcome fit: response length mismatch");
  if (!subset.empty() && static_cast<int>(subset.size()) != n) {
    throw data_error("outcome fit: subset mask length mismatch");
  }
  if (offset.size() && family != Family::poisson) {
    throw config_error("offset is only supported with the poisson family");
  }
  if (offset.size() && offset.size() != n) {
    throw data_error("outcome fit: offset length mismatch");
  }

  const std::vector<int> rows = subset_rows(subset, n);
  const int m = static_cast<int>(rows.size());
  if (m == 0) throw data_error("outcome fit: empty subset");
  if (m <= q) {
    throw data_error("outcome fit: need more observations than columns in the subset");
  }

  Eigen::MatrixXd Xs(m, q);
  Eigen::VectorXd ys(m), os;
  if (offset.size()) os.resize(m);
  for (int r = 0; r < m; ++r) {
    Xs.row(r) = X.values.row(rows[r]);
    ys[r] = y[rows[r]];
    if (offset.size()) os[r] = offset[rows[r]];
  }

  if (family == Family::binomial) {
    for (int r = 0; r < m; ++r) {
      if (ys[r] != 0.0 && ys[r] != 1.0)
        throw data_error("binomial outcome must be 0/1");
    }
    const double ones = ys.sum();
    if (ones == 0.0 || ones == static_cast<double>(m)) {
      throw data_error("binomial outcome fit: both classes must be present");
    }
  }
  if (family == Family::poisson) {
    for (int r = 0; r < m; ++r) {
      if (ys[r] < 0.0 || std::fabs(ys[r] - std::round(ys[r])) > 1e-8) {
        throw data_error("poisson outcome must be a non-negative integer count");
      }
    }
  }
  check_rank(Xs, "outcome fit");

  GlmFit fit;
  fit.family = family;
  fit.X = X.values;
  fit.y = y;
  fit.subset = subset;
  fit.offset = offset;

  if (family == Family::gaussian) {
    fit.coefficients = Xs.colPivHouseholderQr().solve(ys);
    fit.eta = X.values * fit.coefficients;
    fit.fitted = fit.eta;
    fit.converged = true;
    fit.iterations = 1;
    const Eigen::VectorXd resid = ys - Xs * fit.coefficients;
    fit.deviance = resid.squaredNorm();
    return fit;
  }

  IrlsProblem prob{family, Xs, ys, os};
  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(q);
  if (family == Family::poisson) {
    // working-response start: log(y + 0.5) minus offset
    Eigen::VectorXd e0(m);
    for (int r = 0; r < m; ++r) {
      e0[r] = std::log(ys[r] + 0.5) - (os.size() ? os[r] : 0.0);
    }
    beta0 = Xs.colPivHouseholderQr().solve(e0);
  }
  IrlsResult res = run_irls(prob, beta0, opts, "outcome fit");

  fit.coefficients = res.beta;
  fit.eta = X.values * res.beta;
  if (offset.size()) fit.eta += offset;
  if (family == Family::binomial) {
    fit.fitted = fit.eta.unaryExpr([](double t) { return sigmoid(t); });
  } else {
    fit.fitted = fit.eta.array().exp();
  }
  fit.converged = true;
  fit.iterations = res.iterations;
  {
    Eigen::VectorXd eta_s(m);
    for (int r = 0; r < m; ++r) eta_s[r] = fit.eta[rows[r]];
    fit.deviance = family == Family::binomial ? binomial_deviance(ys, eta_s)
                                              : poisson_deviance(ys, eta_s);
  }
  return fit;
}

Eigen::MatrixXd MultinomialFit::score_matrix() const {
  const int n = static_cast<int>(X.rows());
  const int q = static_cast<int>(X.cols());
  const int k = n_groups - 1;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, k * q);
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j < n_groups; ++j) {
      const double d = (z[i] == j ? 1.0 : 0.0) - fitted(i, j);
      S.block(i, (j - 1) * q, 1, q) = d * X.row(i);
    }
  }
  return S;
}

Eigen::MatrixXd MultinomialFit::information() const {
  const int q = static_cast<int>(X.cols());
  const int k = n_groups - 1;
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(k * q, k * q);
  for (int i = 0; i < X.rows(); ++i) {
    const Eigen::MatrixXd xxt = X.row(i).transpose() * X.row(i);
    for (int a = 1; a < n_groups; ++a) {
      for (int b = 1; b < n_groups; ++b) {
        const double w =
            fitted(i, a) * ((a == b ? 1.0 : 0.0) - fitted(i, b));
        info.block((a - 1) * q, (b - 1) * q, q, q) += w * xxt;
      }
    }
  }
  return info;
}

namespace {

Eigen::MatrixXd multinomial_probs(const Eigen::MatrixXd& X,
                                  const Eigen::MatrixXd& B) {
  const int n = static_cast<int>(X.rows());
  const int k = static_cast<int>(B.rows());
  Eigen::MatrixXd eta = X * B.transpose();  // n x k, baseline logit = 0
  Eigen::MatrixXd P(n, k + 1);
  for (int i = 0; i < n; ++i) {
    double mx = 0.0;
    for (int j = 0; j < k; ++j) mx = std::max(mx, eta(i, j));
    double denom = std::exp(-mx);
    for (int j = 0; j < k; ++j) denom += std::exp(eta(i, j) - mx);
    P(i, 0) = std::exp(-mx) / denom;
    for (int j = 0; j < k; ++j) P(i, j + 1) = std::exp(eta(i, j) - mx) / denom;
  }
  return P;
}

double multinomial_deviance(const Eigen::MatrixXd& P, const std::vector<int>& z) {
  double dev = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    dev -= 2.0 * std::log(std::max(P(static_cast<int>(i), z[i]), 1e-300));
  }
  return dev;
}

}  // namespace

MultinomialFit fit_multinomial_logistic(const DesignMatrix& X,
                                        const std::vector<int>& z, int n_groups,
                                        const GlmOptions& opts) {
  const int n = X.rows();
  const int q = X.cols();
  if (static_cast<int>(z.size()) != n)
    throw data_error("multinomial fit: response length mismatch");
  if (n_groups == 2) {
    throw config_error(
        "multinomial fit: two response levels; use the binary logistic fit");
  }
  if (n_groups < 2) throw data_error("multinomial fit: need at least 3 levels");
  std::vector<int> counts(n_groups, 0);
  for (int zi : z) {
    if (zi < 0 || zi >= n_groups) throw data_error("multinomial fit: level out of range");
    ++counts[zi];
  }
  for (int j = 0; j < n_groups; ++j) {
    if (counts[j] == 0)
      throw data_error("multinomial fit: level " + std::to_string(j) + " unobserved");
  }
  const int k = n_groups - 1;
  if (n <= q * k) {
    throw data_error("multinomial fit: need more observations than parameters");
  }
  check_rank(X.values, "multinomial fit");

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k, q);
  Eigen::MatrixXd P = multinomial_probs(X.values, B);
  double dev = multinomial_deviance(P, z);
  bool converged = false;
  int iterations = 0;

  for (int iter = 1; iter <= opts.max_iterations && !converged; ++iter) {
    iterations = iter;

    // gradient and Fisher information at the current B
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(k * q);
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(k * q, k * q);
    for (int i = 0; i < n; ++i) {
      const Eigen::RowVectorXd xi = X.values.row(i);
      for (int a = 1; a < n_groups; ++a) {
        const double d = (z[i] == a ? 1.0 : 0.0) - P(i, a);
        grad.segment((a - 1) * q, q) += d * xi.transpose();
        for (int b = a; b < n_groups; ++b) {
          const double w = P(i, a) * ((a == b ? 1.0 : 0.0) - P(i, b));
          const Eigen::MatrixXd blk = w * (xi.transpose() * xi);
          info.block((a - 1) * q, (b - 1) * q, q, q) += blk;
          if (b != a) info.block((b - 1) * q, (a - 1) * q, q, q) += blk;
        }
      }
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success) {
      throw fit_error("multinomial fit: singular information matrix");
    }
    const Eigen::VectorXd step = ldlt.solve(grad);

    Eigen::MatrixXd B_new = B;
    for (int a = 0; a < k; ++a) B_new.row(a) += step.segment(a * q, q).transpose();
    Eigen::MatrixXd P_new = multinomial_probs(X.values, B_new);
    double dev_new = multinomial_deviance(P_new, z);

    for (int h = 0; h < opts.max_step_halvings && !(dev_new <= dev); ++h) {
      B_new = 0.5 * (B + B_new);
      P_new = multinomial_probs(X.values, B_new);
      dev_new = multinomial_deviance(P_new, z);
    }

    const double rel = std::fabs(dev_new - dev) / (std::fabs(dev_new) + 0.1);
    B = B_new;
    P = P_new;
    dev = dev_new;

    if (rel < opts.deviance_tol) {
      Eigen::VectorXd g2 = Eigen::VectorXd::Zero(k * q);
      for (int i = 0; i < n; ++i) {
        for (int a = 1; a < n_groups; ++a) {
          const double d = (z[i] == a ? 1.0 : 0.0) - P(i, a);
          g2.segment((a - 1) * q, q) += d * X.values.row(i).transpose();
        }
      }
      const double score_norm = g2.lpNorm<Eigen::Infinity>();
      const double eta_max = (X.values * B.transpose()).lpNorm<Eigen::Infinity>();
      if (score_norm < opts.score_tol && eta_max <= opts.eta_guard) converged = true;
    }
  }

  if (!converged) {
    throw fit_error("multinomial fit: no convergence after " +
                    std::to_string(opts.max_iterations) +
                    " iterations (possible separation or degenerate design)");
  }

  MultinomialFit fit;
  fit.coefficients = B;
  fit.fitted = P;
  fit.converged = true;
  fit.iterations = iterations;
  fit.deviance = dev;
  fit.n_groups = n_groups;
  fit.X = X.values;
  fit.z = z;
  return fit;
}

}  // namespace psw
