#include "psw/estimation.hpp"

#include <cmath>
#include <sstream>

#include "psw/errors.hpp"

namespace psw {

PotentialOutcomeMeans hajek_means(const Eigen::VectorXd& y, const TiltedWeights& tw,
                                  const std::vector<int>& z_index, int n_groups) {
  const int n = static_cast<int>(y.size());
  if (static_cast<int>(z_index.size()) != n || tw.w.size() != n) {
    throw data_error("hajek_means: input sizes disagree");
  }
  Eigen::VectorXd num = Eigen::VectorXd::Zero(n_groups);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(n_groups);
  for (int i = 0; i < n; ++i) {
    num[z_index[i]] += tw.w[i] * y[i];
    den[z_index[i]] += tw.w[i];
  }
  PotentialOutcomeMeans out;
  out.scheme = tw.scheme;
  out.augmented = false;
  out.mu.resize(n_groups);
  for (int j = 0; j < n_groups; ++j) {
    if (!(den[j] > 0.0)) {
      throw fit_error("hajek_means: zero total weight in group " + std::to_string(j));
    }
    out.mu[j] = num[j] / den[j];
  }
  out.nu = out.mu;
  return out;
}

PotentialOutcomeMeans augmented_means(const Eigen::VectorXd& y,
                                      const TiltedWeights& tw,
                                      const std::vector<int>& z_index,
                                      const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(y.size());
  const int n_groups = static_cast<int>(m.cols());
  if (m.rows() != n || static_cast<int>(z_index.size()) != n || tw.w.size() != n) {
    throw data_error("augmented_means: input sizes disagree");
  }
  const double sh = tw.h.sum();
  if (!(sh > 0.0)) throw fit_error("augmented_means: zero total tilting mass");

  Eigen::VectorXd num = Eigen::VectorXd::Zero(n_groups);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(n_groups);
  for (int i = 0; i < n; ++i) {
    const int j = z_index[i];
    num[j] += tw.w[i] * (y[i] - m(i, j));
    den[j] += tw.w[i];
  }

  PotentialOutcomeMeans out;
  out.scheme = tw.scheme;
  out.augmented = true;
  out.m = m;
  out.nu.resize(n_groups);
  out.eta.resize(n_groups);
  out.mu.resize(n_groups);
  for (int j = 0; j < n_groups; ++j) {
    if (!(den[j] > 0.0)) {
      throw fit_error("augmented_means: zero total weight in group " +
                      std::to_string(j));
    }
    out.nu[j] = num[j] / den[j];
    out.eta[j] = tw.h.dot(m.col(j)) / sh;
    out.mu[j] = out.nu[j] + out.eta[j];
  }
  return out;
}

Scale scale_from_string(const std::string& name) {
  if (name == "DIF") return Scale::DIF;
  if (name == "RR") return Scale::RR;
  if (name == "OR") return Scale::OR;
  throw config_error("unknown contrast type '" + name + "' (expected DIF, RR or OR)");
}

std::string to_string(Scale s) {
  switch (s) {
    case Scale::DIF: return "DIF";
    case Scale::RR: return "RR";
    case Scale::OR: return "OR";
  }
  return "?";
}

ContrastSpec pairwise_contrasts(const std::vector<std::string>& group_labels,
                                Scale scale) {
  const int J = static_cast<int>(group_labels.size());
  const int K = J * (J - 1) / 2;
  ContrastSpec c;
  c.scale = scale;
  c.coef = Eigen::MatrixXd::Zero(K, J);
  int row = 0;
  for (int a = 0; a < J; ++a) {
    for (int b = a + 1; b < J; ++b, ++row) {
      c.coef(row, b) = 1.0;
      c.coef(row, a) = -1.0;
      c.labels.push_back(group_labels[b] + " - " + group_labels[a]);
    }
  }
  return c;
}

ContrastSpec parse_contrast(const std::string& text, int n_groups, Scale scale) {
  std::vector<std::vector<double>> rows;
  std::stringstream row_stream(text);
  std::string row_text;
  while (std::getline(row_stream, row_text, ';')) {
    std::vector<double> row;
    std::stringstream cell_stream(row_text);
    std::string cell;
    while (std::getline(cell_stream, cell, ',')) {
      try {
        size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size()) {
          if (!std::isspace(static_cast<unsigned char>(cell[used]))) {
            throw std::invalid_argument(cell);
          }
          ++used;
        }
      } catch (const std::exception&) {
        throw config_error("bad contrast coefficient '" + cell + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw config_error("empty contrast specification");

  ContrastSpec c;
  c.scale = scale;
  c.coef.resize(static_cast<int>(rows.size()), n_groups);
  for (size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<int>(rows[r].size()) != n_groups) {
      throw config_error("contrast row " + std::to_string(r + 1) + " has " +
                         std::to_string(rows[r].size()) + " coefficients, expected " +
                         std::to_string(n_groups));
    }
    for (int j = 0; j < n_groups; ++j) c.coef(static_cast<int>(r), j) = rows[r][j];
    c.labels.push_back("Contrast " + std::to_string(r + 1));
  }
  return c;
}

Eigen::VectorXd apply_contrast(const PotentialOutcomeMeans& pom,
                               const ContrastSpec& contrast) {
  const int J = static_cast<int>(pom.mu.size());
  if (contrast.coef.cols() != J) {
    throw config_error("contrast has " + std::to_string(contrast.coef.cols()) +
                       " columns but there are " + std::to_string(J) + " groups");
  }
  Eigen::VectorXd transformed(J);
  switch (contrast.scale) {
    case Scale::DIF:
      transformed = pom.mu;
      break;
    case Scale::RR:
      for (int j = 0; j < J; ++j) {
        if (!(pom.mu[j] > 0.0)) {
          throw fit_error("RR contrast: average potential outcome for group " +
                          std::to_string(j) + " is not positive");
        }
        transformed[j] = std::log(pom.mu[j]);
      }
      break;
    case Scale::OR:
      for (int j = 0; j < J; ++j) {
        if (!(pom.mu[j] > 0.0 && pom.mu[j] < 1.0)) {
          throw fit_error("OR contrast: average potential outcome for group " +
                          std::to_string(j) + " is outside (0,1)");
        }
        transformed[j] = std::log(pom.mu[j]) - std::log1p(-pom.mu[j]);
      }
      break;
  }
  return contrast.coef * transformed;
}

}  // namespace psw
