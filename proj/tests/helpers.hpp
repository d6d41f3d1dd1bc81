#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "psw/dataset.hpp"
#include "psw/rng.hpp"

namespace psw::test {

// Builds an in-memory dataset from named columns of cell text.
inline Dataset make_dataset(const std::vector<std::string>& names,
                            const std::vector<std::vector<std::string>>& columns) {
  CsvTable t;
  t.header = names;
  const size_t n = columns.at(0).size();
  for (size_t i = 0; i < n; ++i) {
    std::vector<std::string> row;
    for (const auto& col : columns) row.push_back(col.at(i));
    t.rows.push_back(row);
  }
  return Dataset(std::move(t));
}

inline std::vector<std::string> num_column(const Eigen::VectorXd& v) {
  std::vector<std::string> out;
  for (int i = 0; i < v.size(); ++i) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    out.emplace_back(buf);
  }
  return out;
}

inline Eigen::MatrixXd random_matrix(int n, int p, Rng& rng) {
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
  }
  return X;
}

}  // namespace psw::test
