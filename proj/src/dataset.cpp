#include "psw/dataset.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "psw/errors.hpp"

namespace psw {

Dataset::Dataset(CsvTable table) : table_(std::move(table)) {
  for (int j = 0; j < table_.n_cols(); ++j) {
    auto [it, inserted] = index_.emplace(table_.header[j], j);
    if (!inserted) throw data_error("duplicate column name: " + table_.header[j]);
  }
}

Dataset Dataset::from_csv_file(const std::string& path) {
  return Dataset(read_csv_file(path));
}

bool Dataset::is_missing_cell(const std::string& cell) {
  return cell.empty() || cell == "NA";
}

bool Dataset::has_column(const std::string& name) const {
  return index_.count(name) > 0;
}

int Dataset::column_index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw data_error("missing column: " + name);
  return it->second;
}

std::vector<std::string> Dataset::raw_column(const std::string& name) const {
  const int j = column_index(name);
  std::vector<std::string> out;
  out.reserve(table_.rows.size());
  for (const auto& row : table_.rows) out.push_back(row[j]);
  return out;
}

Eigen::VectorXd Dataset::numeric_column(const std::string& name) const {
  const int j = column_index(name);
  Eigen::VectorXd out(rows());
  for (int i = 0; i < rows(); ++i) {
    const std::string& cell = table_.rows[i][j];
    if (is_missing_cell(cell)) {
      throw data_error("missing value in column '" + name + "' at row " +
                       std::to_string(i + 1));
    }
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0') {
      throw data_error("non-numeric value '" + cell + "' in column '" + name +
                       "' at row " + std::to_string(i + 1));
    }
    out[i] = v;
  }
  return out;
}

std::vector<std::string> Dataset::label_column(const std::string& name) const {
  const int j = column_index(name);
  std::vector<std::string> out;
  out.reserve(table_.rows.size());
  for (int i = 0; i < rows(); ++i) {
    const std::string& cell = table_.rows[i][j];
    if (is_missing_cell(cell)) {
      throw data_error("missing value in column '" + name + "' at row " +
                       std::to_string(i + 1));
    }
    out.push_back(cell);
  }
  return out;
}

Dataset Dataset::subset(const std::vector<int>& row_indices) const {
  CsvTable t;
  t.header = table_.header;
  t.rows.reserve(row_indices.size());
  for (int i : row_indices) {
    if (i < 0 || i >= rows()) throw data_error("row index out of range");
    t.rows.push_back(table_.rows[i]);
  }
  return Dataset(std::move(t));
}

std::vector<int> GroupCoding::group_sizes() const {
  std::vector<int> sizes(labels.size(), 0);
  for (int g : index) ++sizes[g];
  return sizes;
}

GroupCoding code_groups(const std::vector<std::string>& values) {
  GroupCoding coding;
  std::set<std::string> distinct(values.begin(), values.end());
  coding.labels.assign(distinct.begin(), distinct.end());
  std::unordered_map<std::string, int> pos;
  for (size_t k = 0; k < coding.labels.size(); ++k) pos[coding.labels[k]] = static_cast<int>(k);
  coding.index.reserve(values.size());
  for (const auto& v : values) coding.index.push_back(pos.at(v));
  return coding;
}

}  // namespace psw
