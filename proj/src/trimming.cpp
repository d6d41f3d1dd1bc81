#include "psw/trimming.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "psw/errors.hpp"

namespace psw {

int TrimResult::total_trimmed() const {
  return std::accumulate(trimmed_by_group.begin(), trimmed_by_group.end(), 0);
}

int TrimResult::total_remained() const {
  return std::accumulate(remained_by_group.begin(), remained_by_group.end(), 0);
}

std::vector<int> TrimResult::kept_indices() const {
  std::vector<int> idx;
  for (size_t i = 0; i < kept.size(); ++i) {
    if (kept[i]) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

namespace {

TrimResult finish(std::vector<char> kept, const PropensityMatrix& e,
                  const std::vector<int>& z_index) {
  TrimResult out;
  out.kept = std::move(kept);
  out.labels = e.group_labels();
  out.trimmed_by_group.assign(e.groups(), 0);
  out.remained_by_group.assign(e.groups(), 0);
  for (size_t i = 0; i < out.kept.size(); ++i) {
    auto& bucket = out.kept[i] ? out.remained_by_group : out.trimmed_by_group;
    ++bucket[z_index[i]];
  }
  return out;
}

}  // namespace

TrimResult symmetric_trim(const PropensityMatrix& e, double delta,
                          const std::vector<int>& z_index) {
  const int J = e.groups();
  if (!(delta >= 0.0) || delta >= 1.0 / J) {
    throw config_error("trimming threshold must satisfy 0 <= delta < 1/J (J=" +
                       std::to_string(J) + ")");
  }
  const int n = e.rows();
  std::vector<char> kept(n, 1);
  for (int i = 0; i < n; ++i) {
    kept[i] = e.values().row(i).minCoeff() >= delta ? 1 : 0;
  }
  TrimResult out = finish(std::move(kept), e, z_index);
  out.delta_used = delta;
  return out;
}

TrimResult optimal_trim(const PropensityMatrix& e, const std::vector<int>& z_index) {
  const int n = e.rows();
  Eigen::VectorXd g = e.values().array().inverse().rowwise().sum();

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return g[a] < g[b]; });

  // Scan prefixes of the sorted g. Candidate thresholds sit at tie-block
  // boundaries so that every kept set is a level set {g <= gamma}. The
  // objective sum_kept g / k^2 is the sample analog of the asymptotic
  // variance of the ATE estimator restricted to the kept set; its argmin is
  // the empirical solution of gamma = 2 E[g | g <= gamma]. Ties prefer the
  // larger kept set.
  double best = std::numeric_limits<double>::infinity();
  int best_k = n;
  double prefix = 0.0;
  for (int k = 1; k <= n; ++k) {
    prefix += g[order[k - 1]];
    const bool block_end = (k == n) || (g[order[k]] > g[order[k - 1]]);
    if (!block_end) continue;
    const double objective = prefix / (static_cast<double>(k) * k);
    if (objective <= best) {
      best = objective;
      best_k = k;
    }
  }

  const double gamma_star = g[order[best_k - 1]];
  std::vector<char> kept(n, 0);
  for (int i = 0; i < n; ++i) kept[i] = g[i] <= gamma_star ? 1 : 0;

  TrimResult out = finish(std::move(kept), e, z_index);
  out.delta_used = std::numeric_limits<double>::quiet_NaN();
  out.gamma_star = gamma_star;
  return out;
}

std::string format_trim_table(const TrimResult& trim) {
  std::ostringstream os;
  size_t label_width = 8;  // "remained"
  for (const auto& l : trim.labels) label_width = std::max(label_width, l.size());

  os << trim.total_trimmed() << " cases trimmed, " << trim.total_remained()
     << " cases remained\n\n";
  os << "trimmed result by trt group:\n";
  os << std::setw(static_cast<int>(label_width)) << "";
  for (const auto& l : trim.labels) {
    os << " " << std::setw(static_cast<int>(std::max(l.size(), size_t(6)))) << l;
  }
  os << "\n" << std::setw(static_cast<int>(label_width)) << std::left << "trimmed"
     << std::right;
  for (size_t j = 0; j < trim.labels.size(); ++j) {
    os << " " << std::setw(static_cast<int>(std::max(trim.labels[j].size(), size_t(6))))
       << trim.trimmed_by_group[j];
  }
  os << "\n" << std::setw(static_cast<int>(label_width)) << std::left << "remained"
     << std::right;
  for (size_t j = 0; j < trim.labels.size(); ++j) {
    os << " " << std::setw(static_cast<int>(std::max(trim.labels[j].size(), size_t(6))))
       << trim.remained_by_group[j];
  }
  os << "\n";
  return os.str();
}

}  // namespace psw
