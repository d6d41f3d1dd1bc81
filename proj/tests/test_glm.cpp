#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "psw/errors.hpp"
#include "psw/glm.hpp"

using namespace psw;

namespace {

DesignMatrix wrap(const Eigen::MatrixXd& X) {
  DesignMatrix d;
  d.values = X;
  d.has_intercept = true;
  for (int c = 0; c < X.cols(); ++c) d.column_names.push_back("c" + std::to_string(c));
  return d;
}

// independent unit log-likelihoods for finite-difference checks
double loglik_unit(Family fam, const Eigen::RowVectorXd& x, double y,
                   const Eigen::VectorXd& beta, double offset = 0.0) {
  const double eta = x.dot(beta) + offset;
  switch (fam) {
    case Family::binomial: {
      const double lse = eta > 30 ? eta : std::log1p(std::exp(eta));
      return y * eta - lse;
    }
    case Family::poisson:
      return y * eta - std::exp(eta);
    case Family::gaussian: {
      const double r = y - eta;
      return -0.5 * r * r;
    }
  }
  return 0.0;
}

}  // namespace

TEST_CASE("intercept-only logistic recovers the sample proportion") {
  const int n = 100;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  z.head(30).setOnes();
  const GlmFit fit = fit_binary_logistic(wrap(Eigen::MatrixXd::Ones(n, 1)), z);
  CHECK(fit.converged);
  for (int i = 0; i < n; ++i) CHECK(fit.fitted[i] == doctest::Approx(0.3).epsilon(1e-7));
}

TEST_CASE("perfectly separating covariate errors at the iteration cap") {
  const int n = 40;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) {
    const double x = (i - n / 2) / 4.0;
    X(i, 0) = 1.0;
    X(i, 1) = x;
    z[i] = x > 0 ? 1.0 : 0.0;
  }
  CHECK_THROWS_AS(fit_binary_logistic(wrap(X), z), fit_error);
}

TEST_CASE("single-class response violates the contract") {
  Eigen::VectorXd z = Eigen::VectorXd::Ones(20);
  CHECK_THROWS_AS(fit_binary_logistic(wrap(Eigen::MatrixXd::Ones(20, 1)), z),
                  data_error);
}

TEST_CASE("rank-deficient design is rejected") {
  Rng rng(3);
  Eigen::MatrixXd X(30, 3);
  X.col(0).setOnes();
  for (int i = 0; i < 30; ++i) X(i, 1) = rng.normal();
  X.col(2) = X.col(0) + X.col(1);  // exact linear dependence, not a duplicate
  Eigen::VectorXd z(30);
  for (int i = 0; i < 30; ++i) z[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
  CHECK_THROWS_AS(fit_binary_logistic(wrap(X), z), fit_error);
}

TEST_CASE("more parameters than observations is rejected") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(3, 4);
  Eigen::VectorXd z(3);
  z << 0, 1, 0;
  CHECK_THROWS_AS(fit_binary_logistic(wrap(X), z), data_error);
}

TEST_CASE("intercept-only multinomial recovers the sample shares") {
  const int n = 100;
  std::vector<int> z(n);
  for (int i = 0; i < n; ++i) z[i] = i < 50 ? 0 : (i < 80 ? 1 : 2);
  const MultinomialFit fit =
      fit_multinomial_logistic(wrap(Eigen::MatrixXd::Ones(n, 1)), z, 3);
  CHECK(fit.converged);
  CHECK(fit.fitted(0, 0) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(fit.fitted(0, 1) == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(fit.fitted(0, 2) == doctest::Approx(0.2).epsilon(1e-8));
}

TEST_CASE("two-level multinomial is redirected to the binary fit") {
  std::vector<int> z = {0, 1, 0, 1, 0, 1};
  CHECK_THROWS_AS(fit_multinomial_logistic(wrap(Eigen::MatrixXd::Ones(6, 1)), z, 2),
                  config_error);
}

TEST_CASE("multinomial fitted rows sum to one") {
  for (std::uint64_t seed : {1, 2, 3}) {
    Rng rng(seed);
    const int n = 150;
    Eigen::MatrixXd X(n, 3);
    X.col(0).setOnes();
    for (int i = 0; i < n; ++i) {
      X(i, 1) = rng.normal();
      X(i, 2) = rng.normal();
    }
    std::vector<int> z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.uniform_int(3);
    const MultinomialFit fit = fit_multinomial_logistic(wrap(X), z, 3);
    for (int i = 0; i < n; ++i) {
      CHECK(std::fabs(fit.fitted.row(i).sum() - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("gaussian intercept-only is the mean, predictions extend to all rows") {
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  const GlmFit fit =
      fit_outcome_glm(wrap(Eigen::MatrixXd::Ones(3, 1)), y, Family::gaussian, {});
  CHECK(fit.fitted.isApproxToConstant(2.0, 1e-12));

  // group-specific fit still predicts everywhere
  Eigen::VectorXd y6(6);
  y6 << 1, 2, 3, 10, 20, 30;
  std::vector<char> mask = {1, 1, 1, 0, 0, 0};
  const GlmFit sub =
      fit_outcome_glm(wrap(Eigen::MatrixXd::Ones(6, 1)), y6, Family::gaussian, mask);
  CHECK(sub.fitted.size() == 6);
  CHECK(sub.fitted[5] == doctest::Approx(2.0));
}

TEST_CASE("poisson intercept-only with offset has the closed-form MLE") {
  Rng rng(11);
  const int n = 40;
  Eigen::VectorXd y(n), off(n);
  for (int i = 0; i < n; ++i) {
    off[i] = 0.5 * rng.normal();
    y[i] = std::floor(rng.uniform() * 5);
  }
  const GlmFit fit = fit_outcome_glm(wrap(Eigen::MatrixXd::Ones(n, 1)), y,
                                     Family::poisson, {}, off);
  const double expected = std::log(y.sum() / off.array().exp().sum());
  CHECK(fit.coefficients[0] == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("binomial outcome outside 0/1 is rejected") {
  Eigen::VectorXd y(4);
  y << 0, 1, 2, 1;
  CHECK_THROWS_AS(
      fit_outcome_glm(wrap(Eigen::MatrixXd::Ones(4, 1)), y, Family::binomial, {}),
      data_error);
}

TEST_CASE("poisson outcome must be integer counts") {
  Eigen::VectorXd y(4);
  y << 0, 1, 2.5, 1;
  CHECK_THROWS_AS(
      fit_outcome_glm(wrap(Eigen::MatrixXd::Ones(4, 1)), y, Family::poisson, {}),
      data_error);
}

TEST_CASE("offset with a non-poisson family is rejected") {
  Eigen::VectorXd y(4);
  y << 0, 1, 0, 1;
  CHECK_THROWS_AS(fit_outcome_glm(wrap(Eigen::MatrixXd::Ones(4, 1)), y,
                                  Family::gaussian, {}, Eigen::VectorXd::Ones(4)),
                  config_error);
}

TEST_CASE("score identity holds at the MLE for every family") {
  Rng rng(42);
  const int n = 120;
  Eigen::MatrixXd X(n, 3);
  X.col(0).setOnes();
  for (int i = 0; i < n; ++i) {
    X(i, 1) = rng.normal();
    X(i, 2) = rng.normal();
  }

  SUBCASE("binomial") {
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) {
      const double p = 1.0 / (1.0 + std::exp(-(0.2 + 0.5 * X(i, 1))));
      z[i] = rng.uniform() < p ? 1.0 : 0.0;
    }
    const GlmFit fit = fit_binary_logistic(wrap(X), z);
    CHECK(fit.score_matrix().colwise().sum().lpNorm<Eigen::Infinity>() < 1e-6);
  }
  SUBCASE("gaussian") {
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = 1.0 + X(i, 1) + rng.normal();
    const GlmFit fit = fit_outcome_glm(wrap(X), y, Family::gaussian, {});
    CHECK(fit.score_matrix().colwise().sum().lpNorm<Eigen::Infinity>() < 1e-6);
  }
  SUBCASE("poisson") {
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      const double mu = std::exp(0.5 + 0.3 * X(i, 1));
      // inversion draw from the cumulative Poisson probabilities
      double u = rng.uniform(), acc = std::exp(-mu), cum = acc;
      int k = 0;
      while (u > cum && k < 60) {
        ++k;
        acc *= mu / k;
        cum += acc;
      }
      y[i] = k;
    }
    const GlmFit fit = fit_outcome_glm(wrap(X), y, Family::poisson, {});
    CHECK(fit.score_matrix().colwise().sum().lpNorm<Eigen::Infinity>() < 1e-6);
  }
  SUBCASE("multinomial") {
    std::vector<int> z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.uniform_int(3);
    const MultinomialFit fit = fit_multinomial_logistic(wrap(X), z, 3);
    CHECK(fit.score_matrix().colwise().sum().lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("analytic score and information match finite differences") {
  Rng rng(9);
  const int n = 25;
  Eigen::MatrixXd X(n, 3);
  X.col(0).setOnes();
  for (int i = 0; i < n; ++i) {
    X(i, 1) = rng.normal();
    X(i, 2) = 0.5 * rng.normal();
  }
  const double h = 1e-5;

  for (Family fam : {Family::binomial, Family::poisson, Family::gaussian}) {
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      if (fam == Family::binomial) y[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
      else if (fam == Family::poisson) y[i] = rng.uniform_int(5);
      else y[i] = rng.normal();
    }
    const GlmFit fit = fam == Family::binomial
                           ? fit_binary_logistic(wrap(X), y)
                           : fit_outcome_glm(wrap(X), y, fam, {});
    const Eigen::VectorXd beta = fit.coefficients;
    const Eigen::VectorXd v = fit.mean_derivative();

    for (int i = 0; i < n; i += 7) {
      for (int k = 0; k < 3; ++k) {
        Eigen::VectorXd bp = beta, bm = beta;
        bp[k] += h;
        bm[k] -= h;
        const double fd =
            (loglik_unit(fam, X.row(i), y[i], bp) - loglik_unit(fam, X.row(i), y[i], bm)) /
            (2 * h);
        const double analytic = fit.score(i)[k];
        CHECK(std::fabs(fd - analytic) <=
              1e-5 * std::max(1.0, std::fabs(analytic)));

        // second derivative: d^2 l / d beta_k^2 = -v * x_k^2
        const double fd2 = (loglik_unit(fam, X.row(i), y[i], bp) -
                            2 * loglik_unit(fam, X.row(i), y[i], beta) +
                            loglik_unit(fam, X.row(i), y[i], bm)) /
                           (h * h);
        const double analytic2 = -v[i] * X(i, k) * X(i, k);
        CHECK(std::fabs(fd2 - analytic2) <=
              2e-4 * std::max(1.0, std::fabs(analytic2)));
      }
    }
  }
}

TEST_CASE("fitted deviance does not exceed the null deviance") {
  Rng rng(5);
  const int n = 200;
  Eigen::MatrixXd X(n, 2);
  X.col(0).setOnes();
  for (int i = 0; i < n; ++i) X(i, 1) = 3.0 * rng.normal();
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-(0.3 + 0.8 * X(i, 1))));
    z[i] = rng.uniform() < p ? 1.0 : 0.0;
  }
  const GlmFit fit = fit_binary_logistic(wrap(X), z);
  CHECK(fit.converged);
  const double pbar = z.mean();
  double null_dev = 0.0;
  for (int i = 0; i < n; ++i) {
    null_dev -= 2.0 * (z[i] * std::log(pbar) + (1 - z[i]) * std::log(1 - pbar));
  }
  CHECK(fit.deviance <= null_dev);
}
