#include "psw/simulation.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "psw/errors.hpp"
#include "psw/rng.hpp"

namespace psw {

namespace {

double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> data) {
  const int r = static_cast<int>(data.size());
  const int c = static_cast<int>(data.begin()->size());
  Eigen::MatrixXd m(r, c);
  int i = 0;
  for (const auto& row : data) {
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

std::map<std::string, Scenario> make_builtins() {
  std::map<std::string, Scenario> reg;

  Scenario a;
  a.name = "A";
  a.arms = 2;
  a.covariate_dim = 4;
  a.ps_coef = rows({{0.3, 0.4, -0.3, 0.3, -0.2}});
  a.outcome_coef = rows({{1.0, 0.6, 0.5, -0.4, 0.3},
                         {1.5, 0.6, 0.5, -0.4, 0.3}});
  a.noise_sd = 1.0;
  a.outcome = Scenario::Outcome::gaussian;
  a.effect = Scenario::Effect::constant;
  reg["A"] = a;

  Scenario ahet = a;
  ahet.name = "Ahet";
  ahet.outcome_coef = rows({{1.0, 0.6, 0.5, -0.4, 0.3},
                            {1.0, 1.6, 0.5, -0.4, 0.3}});
  ahet.effect = Scenario::Effect::heterogeneous;
  reg["Ahet"] = ahet;

  Scenario b = a;
  b.name = "B";
  b.ps_coef = 3.0 * a.ps_coef;
  reg["B"] = b;

  Scenario c;
  c.name = "C";
  c.arms = 3;
  c.covariate_dim = 4;
  c.ps_coef = rows({{0.2, 0.5, -0.3, 0.2, 0.1},
                    {-0.1, 0.3, 0.4, -0.2, 0.3}});
  c.outcome_coef = rows({{-0.4, 0.5, -0.4, 0.3, 0.2},
                         {0.1, 0.5, -0.4, 0.3, 0.2},
                         {0.5, 0.5, -0.4, 0.3, 0.2}});
  c.outcome = Scenario::Outcome::binomial;
  c.effect = Scenario::Effect::heterogeneous;
  reg["C"] = c;

  Scenario d;
  d.name = "D";
  d.arms = 2;
  d.covariate_dim = 4;
  d.quadratic_ps = true;
  d.ps_coef = rows({{0.2, 0.6, -0.4, 0.2, -0.2, 0.8}});
  d.outcome_coef = rows({{1.0, 1.2, 0.8, -0.5, 0.4},
                         {1.5, 1.2, 0.8, -0.5, 0.4}});
  d.noise_sd = 1.0;
  d.outcome = Scenario::Outcome::gaussian;
  d.effect = Scenario::Effect::constant;
  reg["D"] = d;

  return reg;
}

const std::map<std::string, Scenario>& builtins() {
  static const std::map<std::string, Scenario> reg = make_builtins();
  return reg;
}

}  // namespace

std::vector<std::string> Scenario::group_labels() const {
  std::vector<std::string> labels;
  if (arms == 2) {
    labels = {"0", "1"};
  } else {
    for (int j = 1; j <= arms; ++j) labels.push_back(std::to_string(j));
  }
  return labels;
}

Eigen::RowVectorXd Scenario::features(const Eigen::RowVectorXd& x) const {
  Eigen::RowVectorXd f(n_features());
  f[0] = 1.0;
  f.segment(1, covariate_dim) = x;
  if (quadratic_ps) f[n_features() - 1] = x[0] * x[0];
  return f;
}

Eigen::RowVectorXd Scenario::true_propensity(const Eigen::RowVectorXd& x) const {
  const Eigen::RowVectorXd f = features(x);
  Eigen::RowVectorXd eta = f * ps_coef.transpose();  // arms-1 logits vs baseline
  Eigen::RowVectorXd e(arms);
  double mx = 0.0;
  for (int r = 0; r < arms - 1; ++r) mx = std::max(mx, eta[r]);
  double denom = std::exp(-mx);
  for (int r = 0; r < arms - 1; ++r) denom += std::exp(eta[r] - mx);
  e[0] = std::exp(-mx) / denom;
  for (int r = 0; r < arms - 1; ++r) e[r + 1] = std::exp(eta[r] - mx) / denom;
  return e;
}

double Scenario::mean_outcome(const Eigen::RowVectorXd& x, int arm) const {
  Eigen::RowVectorXd xf(1 + covariate_dim);
  xf[0] = 1.0;
  xf.segment(1, covariate_dim) = x;
  const double lp = xf.dot(outcome_coef.row(arm));
  return outcome == Outcome::binomial ? sigmoid(lp) : lp;
}

const Scenario& builtin_scenario(const std::string& name) {
  auto it = builtins().find(name);
  if (it == builtins().end()) {
    std::string known;
    for (const auto& [k, v] : builtins()) {
      if (!known.empty()) known += ", ";
      known += k;
    }
    throw config_error("unknown scenario '" + name + "' (known: " + known + ")");
  }
  return it->second;
}

std::vector<std::string> builtin_scenario_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : builtins()) names.push_back(k);
  return names;
}

Dataset generate(const Scenario& s, int n, std::uint64_t seed) {
  if (n < 1) throw config_error("simulate: n must be >= 1");
  Rng rng(seed);
  const auto labels = s.group_labels();

  CsvTable table;
  for (int j = 1; j <= s.covariate_dim; ++j) table.header.push_back("x" + std::to_string(j));
  table.header.push_back("z");
  table.header.push_back("y");

  char buf[40];
  table.rows.reserve(n);
  Eigen::RowVectorXd x(s.covariate_dim);
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> row;
    row.reserve(table.header.size());
    for (int j = 0; j < s.covariate_dim; ++j) x[j] = rng.normal();
    for (int j = 0; j < s.covariate_dim; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", x[j]);
      row.emplace_back(buf);
    }
    const Eigen::RowVectorXd e = s.true_propensity(x);
    const int arm = rng.categorical(e);
    row.push_back(labels[arm]);

    double y;
    if (s.outcome == Scenario::Outcome::binomial) {
      y = rng.uniform() < s.mean_outcome(x, arm) ? 1.0 : 0.0;
      std::snprintf(buf, sizeof(buf), "%g", y);
    } else {
      y = s.mean_outcome(x, arm) + s.noise_sd * rng.normal();
      std::snprintf(buf, sizeof(buf), "%.17g", y);
    }
    row.emplace_back(buf);
    table.rows.push_back(std::move(row));
  }
  return Dataset(std::move(table));
}

WateOracle true_wate(const Scenario& s, const WeightScheme& scheme, long m_draws,
                     std::uint64_t seed) {
  if (m_draws < 100000) throw config_error("oracle needs at least 1e5 draws");
  Rng rng(seed);
  const int J = s.arms;
  const int treated = scheme.resolve_treated(J);

  // streaming moments of (h, h*m_j) and of the pairwise h*(m_j - m_k)
  double sum_h = 0.0;
  Eigen::VectorXd sum_hm = Eigen::VectorXd::Zero(J);
  Eigen::MatrixXd draws_hm_sq = Eigen::MatrixXd::Zero(J, 3);  // E[(hm)^2], E[hm*h], E[h^2]
  Eigen::MatrixXd pair_acc = Eigen::MatrixXd::Zero(J * J, 3);  // per pair: hd^2, hd*h, (unused)
  Eigen::MatrixXd pair_sum = Eigen::MatrixXd::Zero(J, J);
  double sum_h2 = 0.0;

  Eigen::RowVectorXd x(s.covariate_dim);
  Eigen::RowVectorXd m(J);
  for (long t = 0; t < m_draws; ++t) {
    for (int j = 0; j < s.covariate_dim; ++j) x[j] = rng.normal();
    const Eigen::RowVectorXd e = s.true_propensity(x);
    for (int j = 0; j < J; ++j) m[j] = s.mean_outcome(x, j);

    double h = 0.0;
    switch (scheme.kind) {
      case Scheme::ipw: h = 1.0; break;
      case Scheme::treated: h = e[treated]; break;
      case Scheme::overlap: h = 1.0 / e.array().inverse().sum(); break;
      case Scheme::matching: h = e.minCoeff(); break;
      case Scheme::entropy: h = -(e.array() * e.array().log()).sum(); break;
    }

    sum_h += h;
    sum_h2 += h * h;
    for (int j = 0; j < J; ++j) {
      const double hm = h * m[j];
      sum_hm[j] += hm;
      draws_hm_sq(j, 0) += hm * hm;
      draws_hm_sq(j, 1) += hm * h;
    }
    for (int j = 0; j < J; ++j) {
      for (int k = 0; k < J; ++k) {
        if (j == k) continue;
        const double hd = h * (m[j] - m[k]);
        pair_sum(j, k) += hd;
        pair_acc(j * J + k, 0) += hd * hd;
        pair_acc(j * J + k, 1) += hd * h;
      }
    }
  }

  const double M = static_cast<double>(m_draws);
  const double hbar = sum_h / M;

  WateOracle out;
  out.labels = s.group_labels();
  out.draws = m_draws;
  out.mu.resize(J);
  out.mu_se.resize(J);
  out.pairwise.resize(J, J);
  out.pairwise_se.resize(J, J);

  // delta-method variance of a ratio mean(A)/mean(B):
  // Var = [E A^2 - 2 t E(AB) + t^2 E B^2 - (E A - t E B)^2] / (M * Bbar^2)
  auto ratio_se = [&](double sumA, double sumA2, double sumAB, double t) {
    const double EA2 = sumA2 / M;
    const double EAB = sumAB / M;
    const double EB2 = sum_h2 / M;
    const double EA = sumA / M;
    double v = EA2 - 2.0 * t * EAB + t * t * EB2;
    const double centered = EA - t * hbar;
    v -= centered * centered;
    v = std::max(v, 0.0);
    return std::sqrt(v / M) / hbar;
  };

  for (int j = 0; j < J; ++j) {
    const double t = sum_hm[j] / sum_h;
    out.mu[j] = t;
    out.mu_se[j] = ratio_se(sum_hm[j], draws_hm_sq(j, 0), draws_hm_sq(j, 1), t);
  }
  for (int j = 0; j < J; ++j) {
    for (int k = 0; k < J; ++k) {
      if (j == k) {
        out.pairwise(j, k) = 0.0;
        out.pairwise_se(j, k) = 0.0;
        continue;
      }
      const double t = pair_sum(j, k) / sum_h;
      out.pairwise(j, k) = t;
      out.pairwise_se(j, k) =
          ratio_se(pair_sum(j, k), pair_acc(j * J + k, 0), pair_acc(j * J + k, 1), t);
    }
  }
  return out;
}

}  // namespace psw
