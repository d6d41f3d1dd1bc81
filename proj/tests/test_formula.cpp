#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "psw/design.hpp"
#include "psw/errors.hpp"
#include "psw/formula.hpp"

using namespace psw;

TEST_CASE("parse simple main effects") {
  const Formula f = parse_formula("wage ~ white + maemp");
  CHECK(f.response == "wage");
  REQUIRE(f.terms.size() == 2);
  CHECK(f.terms[0].label() == "white");
  CHECK(f.terms[1].label() == "maemp");
}

TEST_CASE("star expands to main effects plus interaction") {
  const Formula f = parse_formula("y ~ a*b");
  REQUIRE(f.terms.size() == 3);
  CHECK(f.terms[0].label() == "a");
  CHECK(f.terms[1].label() == "b");
  CHECK(f.terms[2].label() == "a:b");
}

TEST_CASE("colon is the interaction alone") {
  const Formula f = parse_formula("y ~ a:b");
  REQUIRE(f.terms.size() == 1);
  CHECK(f.terms[0].label() == "a:b");
  CHECK(f.terms[0].is_interaction());
}

TEST_CASE("three-way star crossing") {
  const Formula f = parse_formula("y ~ a*b*c");
  std::vector<std::string> labels;
  for (const auto& t : f.terms) labels.push_back(t.label());
  CHECK(labels == std::vector<std::string>{"a", "b", "a:b", "c", "a:c", "b:c",
                                           "a:b:c"});
}

TEST_CASE("factor marks categorical expansion") {
  const Formula f = parse_formula("y ~ factor(g) + x");
  REQUIRE(f.terms.size() == 2);
  CHECK(f.terms[0].atoms[0].is_factor);
  CHECK(f.terms[0].atoms[0].column == "g");
  CHECK(f.terms[0].label() == "factor(g)");
}

TEST_CASE("unsupported term functions are rejected") {
  CHECK_THROWS_AS(parse_formula("y ~ bs(x)"), config_error);
  CHECK_THROWS_AS(parse_formula("y ~ ns(x) + a"), config_error);
  CHECK_THROWS_AS(parse_formula("y ~ poly(x)"), config_error);
  CHECK_THROWS_AS(parse_formula("y ~ log(x)"), config_error);
}

TEST_CASE("syntax errors") {
  CHECK_THROWS_AS(parse_formula("y + x"), config_error);      // missing ~
  CHECK_THROWS_AS(parse_formula("y ~ a ~ b"), config_error);  // two ~
  CHECK_THROWS_AS(parse_formula(" ~ x"), config_error);       // empty response
  CHECK_THROWS_AS(parse_formula("y ~ "), config_error);       // empty rhs
  CHECK_THROWS_AS(parse_formula("y ~ factor(x"), config_error);
  CHECK_THROWS_AS(parse_formula("y ~ (a+b)"), config_error);
  CHECK_THROWS_AS(parse_formula("y ~ factor(factor(x))"), config_error);
  CHECK_THROWS_AS(parse_formula("y ~ a +"), config_error);
}

TEST_CASE("duplicate terms collapse after expansion") {
  const Formula f = parse_formula("y ~ a + a*b + b:a");
  std::vector<std::string> labels;
  for (const auto& t : f.terms) labels.push_back(t.label());
  CHECK(labels == std::vector<std::string>{"a", "b", "a:b"});
}

TEST_CASE("render/parse round trip") {
  for (const std::string text :
       {"y ~ a + b", "y ~ a*b", "wage ~ factor(scht) + qmab + paed_u*agepa",
        "y ~ a:b:c + d", "z ~ factor(g):x"}) {
    const Formula f = parse_formula(text);
    const Formula g = parse_formula(f.render());
    CHECK(f == g);
    CHECK(f.render() == g.render());
  }
}

TEST_CASE("design matrix: intercept first, dummy coding against first level") {
  const auto d = test::make_dataset(
      {"y", "x"}, {{"1", "2", "3", "4"}, {"B", "A", "C", "A"}});
  const DesignMatrix m = build_design_matrix(parse_formula("y ~ factor(x)"), d);
  REQUIRE(m.cols() == 3);
  CHECK(m.column_names[0] == "(Intercept)");
  CHECK(m.column_names[1] == "x=B");
  CHECK(m.column_names[2] == "x=C");
  CHECK(m.values.col(0).isOnes());
  CHECK(m.values(0, 1) == 1.0);  // row with level B
  CHECK(m.values(1, 1) == 0.0);
  CHECK(m.values(2, 2) == 1.0);  // row with level C
}

TEST_CASE("interaction columns are elementwise products") {
  const auto d = test::make_dataset({"y", "a", "b"},
                                    {{"0", "0"}, {"1", "2"}, {"3", "4"}});
  const DesignMatrix m = build_design_matrix(parse_formula("y ~ a:b"), d);
  REQUIRE(m.cols() == 2);
  CHECK(m.values(0, 1) == 3.0);
  CHECK(m.values(1, 1) == 8.0);
}

TEST_CASE("missing value in a covariate is an error") {
  const auto d =
      test::make_dataset({"y", "a"}, {{"0", "0", "0"}, {"1", "", "3"}});
  CHECK_THROWS_AS(build_design_matrix(parse_formula("y ~ a"), d), data_error);
  const auto d2 =
      test::make_dataset({"y", "a"}, {{"0", "0", "0"}, {"1", "NA", "3"}});
  CHECK_THROWS_AS(build_design_matrix(parse_formula("y ~ a"), d2), data_error);
}

TEST_CASE("unknown column is an error") {
  const auto d = test::make_dataset({"y", "a"}, {{"0"}, {"1"}});
  CHECK_THROWS_AS(build_design_matrix(parse_formula("y ~ q"), d), data_error);
}

TEST_CASE("exact duplicate columns are rejected") {
  const auto d = test::make_dataset(
      {"y", "a", "b"}, {{"0", "0", "0"}, {"1", "2", "3"}, {"1", "2", "3"}});
  CHECK_THROWS_AS(build_design_matrix(parse_formula("y ~ a + b"), d), data_error);
}

TEST_CASE("single-level factor is rejected") {
  const auto d = test::make_dataset({"y", "g"}, {{"0", "1"}, {"A", "A"}});
  CHECK_THROWS_AS(build_design_matrix(parse_formula("y ~ factor(g)"), d),
                  data_error);
}

TEST_CASE("star design equals concatenation of its parts") {
  Rng rng(7);
  const int n = 20;
  Eigen::VectorXd a(n), b(n), y(n);
  for (int i = 0; i < n; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
    y[i] = rng.normal();
  }
  const auto d = test::make_dataset(
      {"y", "a", "b"},
      {test::num_column(y), test::num_column(a), test::num_column(b)});

  const DesignMatrix full = build_design_matrix(parse_formula("y ~ a*b"), d);
  const DesignMatrix ma = build_design_matrix(parse_formula("y ~ a"), d);
  const DesignMatrix mb = build_design_matrix(parse_formula("y ~ b"), d);
  const DesignMatrix mab = build_design_matrix(parse_formula("y ~ a:b"), d);

  REQUIRE(full.cols() == 4);
  CHECK(full.values.col(1) == ma.values.col(1));
  CHECK(full.values.col(2) == mb.values.col(1));
  CHECK(full.values.col(3) == mab.values.col(1));
  CHECK(full.rows() == d.rows());
}
