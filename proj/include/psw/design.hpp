#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "psw/dataset.hpp"
#include "psw/formula.hpp"

namespace psw {

// Numeric model matrix. When has_intercept is set the first column is all
// ones. Factors are dummy-coded against the lexicographically first observed
// level; interactions are elementwise products of their parents' columns.
struct DesignMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> column_names;
  bool has_intercept = true;

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
};

// Expands the formula's terms over the dataset. Rejects missing values,
// unknown columns, constant-zero columns and exact duplicate columns.
DesignMatrix build_design_matrix(const Formula& f, const Dataset& d);

// Intercept-only matrix (used by intercept-only fits).
DesignMatrix intercept_only_design(int n);

}  // namespace psw
