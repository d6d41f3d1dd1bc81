#pragma once

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <vector>

#include "psw/csv.hpp"

namespace psw {

// Tabular observations backed by the raw CSV cells. Numeric access parses on
// demand; a cell that is empty or "NA" counts as missing and is rejected
// wherever a value is required (the tool never imputes).
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(CsvTable table);

  static Dataset from_csv_file(const std::string& path);

  int rows() const { return table_.n_rows(); }
  int cols() const { return table_.n_cols(); }
  const CsvTable& table() const { return table_; }
  const std::vector<std::string>& column_names() const { return table_.header; }

  bool has_column(const std::string& name) const;

  // Raw cell text of a column; data_error if absent.
  std::vector<std::string> raw_column(const std::string& name) const;

  // Parsed numeric column; data_error on a missing or non-numeric cell.
  Eigen::VectorXd numeric_column(const std::string& name) const;

  // Column as labels; data_error on missing cells.
  std::vector<std::string> label_column(const std::string& name) const;

  // Row subset (duplicates allowed, e.g. bootstrap resamples).
  Dataset subset(const std::vector<int>& row_indices) const;

  static bool is_missing_cell(const std::string& cell);

 private:
  int column_index(const std::string& name) const;

  CsvTable table_;
  std::unordered_map<std::string, int> index_;
};

// Sorted distinct labels (lexicographic) and the per-row index into them.
struct GroupCoding {
  std::vector<std::string> labels;
  std::vector<int> index;  // per row, position in labels

  int n_groups() const { return static_cast<int>(labels.size()); }
  std::vector<int> group_sizes() const;
};

GroupCoding code_groups(const std::vector<std::string>& values);

}  // namespace psw
