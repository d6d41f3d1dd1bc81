#include "psw/design.hpp"

#include <map>
#include <set>

#include "psw/errors.hpp"

namespace psw {

namespace {

// Columns contributed by a single atom, with their names.
struct AtomBlock {
  std::vector<std::string> names;
  Eigen::MatrixXd values;
};

AtomBlock expand_atom(const Term::Atom& atom, const Dataset& d) {
  AtomBlock block;
  if (!atom.is_factor) {
    Eigen::VectorXd col;
    try {
      col = d.numeric_column(atom.column);
    } catch (const data_error& e) {
      // keep the per-cell message but point at the covariate contract
      throw data_error(std::string("missing value in covariate or bad column: ") +
                       e.what());
    }
    block.names.push_back(atom.column);
    block.values = col;
    return block;
  }

  const auto raw = d.label_column(atom.column);  // throws on missing cells
  std::set<std::string> level_set(raw.begin(), raw.end());
  if (level_set.size() < 2) {
    throw data_error("factor '" + atom.column + "' has a single observed level");
  }
  std::vector<std::string> levels(level_set.begin(), level_set.end());
  // reference = lexicographically first level; L-1 indicator columns
  const int n = d.rows();
  const int k = static_cast<int>(levels.size()) - 1;
  block.values = Eigen::MatrixXd::Zero(n, k);
  std::map<std::string, int> pos;
  for (int l = 1; l <= k; ++l) {
    pos[levels[l]] = l - 1;
    block.names.push_back(atom.column + "=" + levels[l]);
  }
  for (int i = 0; i < n; ++i) {
    auto it = pos.find(raw[i]);
    if (it != pos.end()) block.values(i, it->second) = 1.0;
  }
  return block;
}

}  // namespace

DesignMatrix intercept_only_design(int n) {
  DesignMatrix out;
  out.values = Eigen::MatrixXd::Ones(n, 1);
  out.column_names = {"(Intercept)"};
  out.has_intercept = true;
  return out;
}

DesignMatrix build_design_matrix(const Formula& f, const Dataset& d) {
  const int n = d.rows();
  if (n == 0) throw data_error("dataset has no rows");

  std::vector<std::string> names = {"(Intercept)"};
  std::vector<Eigen::VectorXd> cols = {Eigen::VectorXd::Ones(n)};

  for (const auto& term : f.terms) {
    std::vector<AtomBlock> blocks;
    blocks.reserve(term.atoms.size());
    for (const auto& atom : term.atoms) blocks.push_back(expand_atom(atom, d));

    // cross products over the atom blocks, names joined by ':'
    std::vector<std::string> acc_names = blocks[0].names;
    Eigen::MatrixXd acc = blocks[0].values;
    for (size_t b = 1; b < blocks.size(); ++b) {
      const auto& nxt = blocks[b];
      Eigen::MatrixXd merged(n, acc.cols() * nxt.values.cols());
      std::vector<std::string> merged_names;
      merged_names.reserve(merged.cols());
      int out_col = 0;
      for (int p = 0; p < acc.cols(); ++p) {
        for (int q = 0; q < nxt.values.cols(); ++q, ++out_col) {
          merged.col(out_col) = acc.col(p).cwiseProduct(nxt.values.col(q));
          merged_names.push_back(acc_names[p] + ":" + nxt.names[q]);
        }
      }
      acc = std::move(merged);
      acc_names = std::move(merged_names);
    }

    for (int c = 0; c < acc.cols(); ++c) {
      cols.push_back(acc.col(c));
      names.push_back(acc_names[c]);
    }
  }

  DesignMatrix out;
  out.values.resize(n, static_cast<int>(cols.size()));
  for (size_t c = 0; c < cols.size(); ++c) out.values.col(c) = cols[c];
  out.column_names = std::move(names);
  out.has_intercept = true;

  // degenerate expansions: all-zero columns and exact duplicates
  for (int c = 1; c < out.cols(); ++c) {
    if ((out.values.col(c).array() == 0.0).all()) {
      throw data_error("degenerate expansion: column '" + out.column_names[c] +
                       "' is constant zero");
    }
  }
  for (int a = 0; a < out.cols(); ++a) {
    for (int b = a + 1; b < out.cols(); ++b) {
      if (out.values.col(a) == out.values.col(b)) {
        throw data_error("collinear expansion: columns '" + out.column_names[a] +
                         "' and '" + out.column_names[b] + "' are identical");
      }
    }
  }
  return out;
}

}  // namespace psw
