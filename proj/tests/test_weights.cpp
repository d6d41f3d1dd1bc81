#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "psw/design.hpp"
#include "psw/errors.hpp"
#include "psw/estimation.hpp"
#include "psw/glm.hpp"
#include "psw/weights.hpp"

using namespace psw;

namespace {

PropensityMatrix binary_pm(double e1) {
  Eigen::MatrixXd E(1, 2);
  E << 1.0 - e1, e1;
  return PropensityMatrix(E, {"0", "1"}, PropensityMatrix::Source::external);
}

PropensityMatrix binary_pm(const Eigen::VectorXd& e1) {
  Eigen::MatrixXd E(e1.size(), 2);
  E.col(1) = e1;
  E.col(0) = Eigen::VectorXd::Ones(e1.size()) - e1;
  return PropensityMatrix(E, {"0", "1"}, PropensityMatrix::Source::external);
}

}  // namespace

TEST_CASE("tilting functions, binary") {
  const auto pm = binary_pm(0.8);
  CHECK(tilting({Scheme::overlap, -1}, pm)[0] == doctest::Approx(0.16).epsilon(1e-12));
  CHECK(tilting({Scheme::ipw, -1}, pm)[0] == 1.0);
  CHECK(tilting({Scheme::treated, -1}, pm)[0] == doctest::Approx(0.8));
  CHECK(tilting({Scheme::matching, -1}, pm)[0] == doctest::Approx(0.2));

  const auto half = binary_pm(0.5);
  CHECK(tilting({Scheme::entropy, -1}, half)[0] ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("tilting functions, three arms") {
  Eigen::MatrixXd E(1, 3);
  E << 1.0 / 3, 1.0 / 3, 1.0 / 3;
  PropensityMatrix pm(E, {"1", "2", "3"}, PropensityMatrix::Source::external);
  CHECK(tilting({Scheme::overlap, -1}, pm)[0] == doctest::Approx(1.0 / 9).epsilon(1e-12));
  CHECK(tilting({Scheme::matching, -1}, pm)[0] == doctest::Approx(1.0 / 3));
  CHECK(tilting({Scheme::entropy, -1}, pm)[0] ==
        doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("unit weights at e = 0.8 match the binary table") {
  Eigen::VectorXd e1(2);
  e1 << 0.8, 0.8;
  const auto pm = binary_pm(e1);
  const std::vector<int> z = {1, 0};  // first unit treated, second control

  const auto ipw = unit_weights({Scheme::ipw, -1}, pm, z);
  CHECK(ipw.w[0] == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(ipw.w[1] == doctest::Approx(5.0).epsilon(1e-12));

  const auto ow = unit_weights({Scheme::overlap, -1}, pm, z);
  CHECK(ow.w[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(ow.w[1] == doctest::Approx(0.8).epsilon(1e-12));

  const auto mw = unit_weights({Scheme::matching, -1}, pm, z);
  CHECK(mw.w[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(mw.w[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("treated scheme gives weight one to every treated unit") {
  Rng rng(21);
  const int n = 50;
  Eigen::VectorXd e1(n);
  std::vector<int> z(n);
  for (int i = 0; i < n; ++i) {
    e1[i] = 0.05 + 0.9 * rng.uniform();
    z[i] = rng.uniform() < e1[i] ? 1 : 0;
  }
  const auto tw = unit_weights({Scheme::treated, -1}, binary_pm(e1), z);
  for (int i = 0; i < n; ++i) {
    if (z[i] == 1) CHECK(tw.w[i] == 1.0);
    else CHECK(tw.w[i] == doctest::Approx(e1[i] / (1 - e1[i])).epsilon(1e-12));
  }
}

TEST_CASE("multi-arm formulas reduce to the binary ones at J = 2") {
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const double e = 0.02 + 0.96 * rng.uniform();
    const auto pm = binary_pm(e);
    CHECK(tilting({Scheme::overlap, -1}, pm)[0] ==
          doctest::Approx(e * (1 - e)).epsilon(1e-10));
    CHECK(tilting({Scheme::matching, -1}, pm)[0] ==
          doctest::Approx(std::min(e, 1 - e)).epsilon(1e-12));
    CHECK(tilting({Scheme::entropy, -1}, pm)[0] ==
          doctest::Approx(-(e * std::log(e) + (1 - e) * std::log(1 - e)))
              .epsilon(1e-10));
  }
}

TEST_CASE("effective sample size") {
  TiltedWeights tw;
  tw.h = Eigen::VectorXd::Ones(10);
  tw.w = Eigen::VectorXd::Ones(10);
  std::vector<int> z(10, 0);
  SUBCASE("equal weights give ESS = n") {
    CHECK(effective_sample_size(tw, z, 1)[0] == doctest::Approx(10.0));
  }
  SUBCASE("direct formula") {
    tw.w.resize(3);
    tw.w << 1, 1, 2;
    std::vector<int> z3(3, 0);
    CHECK(effective_sample_size(tw, z3, 1)[0] ==
          doctest::Approx(16.0 / 6.0).epsilon(1e-12));
  }
  SUBCASE("single unit") {
    tw.w.resize(1);
    tw.w << 3.7;
    std::vector<int> z1(1, 0);
    CHECK(effective_sample_size(tw, z1, 1)[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("ESS is at most the group size, equality iff constant weights") {
  Rng rng(8);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 5 + rng.uniform_int(20);
    TiltedWeights tw;
    tw.w.resize(n);
    for (int i = 0; i < n; ++i) tw.w[i] = 0.1 + rng.uniform();
    tw.h = tw.w;
    std::vector<int> z(n, 0);
    const double ess = effective_sample_size(tw, z, 1)[0];
    CHECK(ess <= n + 1e-9);
    const bool constant = (tw.w.array() == tw.w[0]).all();
    if (constant) CHECK(ess == doctest::Approx(static_cast<double>(n)));
    else CHECK(ess < n - 1e-12);
  }
}

TEST_CASE("scale invariance: multiplying h leaves estimates alone") {
  Rng rng(15);
  const int n = 60;
  Eigen::VectorXd e1(n), y(n);
  std::vector<int> z(n);
  for (int i = 0; i < n; ++i) {
    e1[i] = 0.1 + 0.8 * rng.uniform();
    z[i] = rng.uniform() < e1[i] ? 1 : 0;
    y[i] = rng.normal();
  }
  z[0] = 0;
  z[1] = 1;
  const auto pm = binary_pm(e1);
  TiltedWeights tw = unit_weights({Scheme::overlap, -1}, pm, z);

  TiltedWeights scaled = tw;
  scaled.h *= 7.25;
  scaled.w *= 7.25;

  const auto mu1 = hajek_means(y, tw, z, 2);
  const auto mu2 = hajek_means(y, scaled, z, 2);
  CHECK(std::fabs(mu1.mu[0] - mu2.mu[0]) < 1e-12);
  CHECK(std::fabs(mu1.mu[1] - mu2.mu[1]) < 1e-12);
}

TEST_CASE("overlap weights balance every model covariate exactly") {
  Rng rng(33);
  const int n = 500;
  Eigen::MatrixXd X(n, 3);
  X.col(0).setOnes();
  for (int i = 0; i < n; ++i) {
    X(i, 1) = rng.normal();
    X(i, 2) = rng.normal();
  }
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-(0.3 + 0.6 * X(i, 1) - 0.4 * X(i, 2))));
    z[i] = rng.uniform() < p ? 1.0 : 0.0;
  }
  DesignMatrix d;
  d.values = X;
  d.has_intercept = true;
  d.column_names = {"(Intercept)", "x1", "x2"};
  const GlmFit fit = fit_binary_logistic(d, z);

  Eigen::MatrixXd E(n, 2);
  E.col(1) = fit.fitted;
  E.col(0) = Eigen::VectorXd::Ones(n) - fit.fitted;
  PropensityMatrix pm(E, {"0", "1"}, PropensityMatrix::Source::fitted);
  std::vector<int> zi(n);
  for (int i = 0; i < n; ++i) zi[i] = static_cast<int>(z[i]);
  const auto tw = unit_weights({Scheme::overlap, -1}, pm, zi);

  for (int c = 1; c < 3; ++c) {
    double n1 = 0, d1 = 0, n0 = 0, d0 = 0;
    for (int i = 0; i < n; ++i) {
      if (zi[i] == 1) {
        n1 += tw.w[i] * X(i, c);
        d1 += tw.w[i];
      } else {
        n0 += tw.w[i] * X(i, c);
        d0 += tw.w[i];
      }
    }
    CHECK(std::fabs(n1 / d1 - n0 / d0) < 1e-6);
  }
}

TEST_CASE("propensity matrix validation") {
  Eigen::MatrixXd bad(1, 2);
  bad << 0.6, 0.6;
  CHECK_THROWS_AS(
      PropensityMatrix(bad, {"0", "1"}, PropensityMatrix::Source::external),
      data_error);

  Eigen::MatrixXd outside(1, 2);
  outside << -0.1, 1.1;
  CHECK_THROWS_AS(
      PropensityMatrix(outside, {"0", "1"}, PropensityMatrix::Source::external),
      data_error);

  Eigen::MatrixXd extreme(1, 2);
  extreme << 1e-9, 1.0 - 1e-9;
  PropensityMatrix pm(extreme, {"0", "1"}, PropensityMatrix::Source::external);
  CHECK(pm.clamp_count() == 2);
  CHECK(pm.values()(0, 0) >= PropensityMatrix::kClampLo / 2);
}

TEST_CASE("labels outside the group set are rejected") {
  const auto pm = binary_pm(0.5);
  std::vector<int> z = {2};
  CHECK_THROWS_AS(unit_weights({Scheme::ipw, -1}, pm, z), data_error);
}
