#include "psw/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "psw/errors.hpp"
#include "psw/formula.hpp"
#include "psw/glm.hpp"

namespace psw {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) {
    if (std::isnan(v[i])) out.push_back(nullptr);
    else out.push_back(v[i]);
  }
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    out.push_back(vector_to_json(m.row(i).transpose()));
  }
  return out;
}

// z coded against the full (pre-trim) label set so columns stay aligned
std::vector<int> code_against(const std::vector<std::string>& labels,
                              const std::vector<std::string>& values) {
  std::vector<int> idx;
  idx.reserve(values.size());
  for (const auto& v : values) {
    const auto it = std::lower_bound(labels.begin(), labels.end(), v);
    if (it == labels.end() || *it != v) {
      throw data_error("treatment label '" + v + "' not in the original group set");
    }
    idx.push_back(static_cast<int>(it - labels.begin()));
  }
  return idx;
}

struct PropensityFit {
  Eigen::MatrixXd e_values;  // n x J
  Eigen::MatrixXd ps_coef;   // (J-1) x q
  Eigen::MatrixXd ps_design;
  int iterations = 0;
};

PropensityFit fit_propensity(const Formula& f, const Dataset& d,
                             const std::vector<std::string>& labels,
                             const std::vector<int>& z_index) {
  const int J = static_cast<int>(labels.size());
  const DesignMatrix X = build_design_matrix(f, d);

  PropensityFit out;
  out.ps_design = X.values;
  if (J == 2) {
    Eigen::VectorXd z01(d.rows());
    for (int i = 0; i < d.rows(); ++i) z01[i] = z_index[i] == 1 ? 1.0 : 0.0;
    const GlmFit fit = fit_binary_logistic(X, z01);
    out.e_values.resize(d.rows(), 2);
    out.e_values.col(1) = fit.fitted;
    out.e_values.col(0) = Eigen::VectorXd::Ones(d.rows()) - fit.fitted;
    out.ps_coef = fit.coefficients.transpose();  // 1 x q
    out.iterations = fit.iterations;
  } else {
    const MultinomialFit fit = fit_multinomial_logistic(X, z_index, J);
    out.e_values = fit.fitted;
    out.ps_coef = fit.coefficients;
    out.iterations = fit.iterations;
  }
  return out;
}

Eigen::MatrixXd import_propensity(const Dataset& d, const RunConfig& cfg,
                                  const std::vector<std::string>& labels) {
  const int J = static_cast<int>(labels.size());
  const int n = d.rows();
  Eigen::MatrixXd E(n, J);
  if (static_cast<int>(cfg.ps_cols.size()) == 1) {
    if (J != 2) {
      throw config_error(
          "a single external propensity column is only valid with binary "
          "treatments");
    }
    // single column = P(Z = treated group)
    int treated = J - 1;
    if (!cfg.trtgrp.empty()) {
      const auto it = std::find(labels.begin(), labels.end(), cfg.trtgrp);
      if (it == labels.end()) {
        throw config_error("--trtgrp '" + cfg.trtgrp + "' is not a treatment level");
      }
      treated = static_cast<int>(it - labels.begin());
    }
    const Eigen::VectorXd p = d.numeric_column(cfg.ps_cols[0]);
    E.col(treated) = p;
    E.col(1 - treated) = Eigen::VectorXd::Ones(n) - p;
  } else {
    if (static_cast<int>(cfg.ps_cols.size()) != J) {
      throw config_error("--ps-cols needs 1 (binary) or " + std::to_string(J) +
                         " columns, got " + std::to_string(cfg.ps_cols.size()));
    }
    // columns correspond to the lexicographically sorted treatment labels
    for (int j = 0; j < J; ++j) E.col(j) = d.numeric_column(cfg.ps_cols[j]);
  }
  return E;
}

}  // namespace

int PreparedData::treated_index(const std::string& trtgrp) const {
  if (trtgrp.empty()) return n_groups() - 1;
  const auto it = std::find(labels.begin(), labels.end(), trtgrp);
  if (it == labels.end()) {
    throw config_error("--trtgrp '" + trtgrp + "' is not a treatment level");
  }
  return static_cast<int>(it - labels.begin());
}

PreparedData prepare_propensity(const Dataset& d, const RunConfig& cfg,
                                bool refit_after_trim) {
  const bool has_formula = !cfg.ps_formula.empty();
  const bool has_cols = !cfg.ps_cols.empty();
  if (has_formula == has_cols) {
    throw config_error(
        "exactly one of --ps-formula and --ps-cols must be supplied");
  }

  Formula f;
  std::string zname = cfg.zname;
  if (has_formula) {
    f = parse_formula(cfg.ps_formula);
    if (!zname.empty() && zname != f.response) {
      throw config_error("--zname disagrees with the formula response");
    }
    zname = f.response;
  } else if (zname.empty()) {
    throw config_error("--zname is required with --ps-cols");
  }

  const GroupCoding groups = code_groups(d.label_column(zname));
  if (groups.n_groups() < 2) {
    throw data_error("treatment column '" + zname + "' has fewer than 2 levels");
  }

  PreparedData prep;
  prep.labels = groups.labels;
  prep.ps_internal = has_formula;

  Eigen::MatrixXd e_full;
  if (has_formula) {
    PropensityFit fit = fit_propensity(f, d, groups.labels, groups.index);
    e_full = fit.e_values;
    prep.ps_coef = fit.ps_coef;
    prep.ps_design = fit.ps_design;
    prep.ps_iterations = fit.iterations;
  } else {
    e_full = import_propensity(d, cfg, groups.labels);
  }

  PropensityMatrix pm_full(
      e_full, groups.labels,
      has_formula ? PropensityMatrix::Source::fitted : PropensityMatrix::Source::external);

  const bool trimming = cfg.optimal || cfg.delta > 0.0;
  if (!trimming) {
    prep.data = d;
    prep.z_index = groups.index;
    prep.e.emplace(std::move(pm_full));
    return prep;
  }

  TrimResult trim = cfg.optimal ? optimal_trim(pm_full, groups.index)
                                : symmetric_trim(pm_full, cfg.delta, groups.index);
  const std::vector<int> kept = trim.kept_indices();
  if (kept.empty()) throw fit_error("trimming removed every unit");

  prep.trim = trim;
  prep.data = d.subset(kept);
  prep.z_index = code_against(groups.labels, prep.data.label_column(zname));
  for (int j = 0; j < prep.n_groups(); ++j) {
    if (trim.remained_by_group[j] == 0) {
      throw fit_error("trimming removed every unit of group '" + prep.labels[j] + "'");
    }
  }

  if (has_formula && refit_after_trim) {
    // the propensity model is refit on the kept subset before any
    // downstream step
    PropensityFit refit = fit_propensity(f, prep.data, prep.labels, prep.z_index);
    prep.ps_coef = refit.ps_coef;
    prep.ps_design = refit.ps_design;
    prep.ps_iterations = refit.iterations;
    prep.e.emplace(refit.e_values, prep.labels, PropensityMatrix::Source::fitted);
  } else {
    Eigen::MatrixXd e_kept(kept.size(), prep.n_groups());
    for (size_t r = 0; r < kept.size(); ++r) {
      e_kept.row(static_cast<int>(r)) = pm_full.values().row(kept[r]);
    }
    prep.e.emplace(e_kept, prep.labels,
                   has_formula ? PropensityMatrix::Source::fitted
                               : PropensityMatrix::Source::external);
  }
  return prep;
}

namespace {

struct OutcomeModels {
  Eigen::MatrixXd m;          // n x J predictions
  Eigen::MatrixXd out_coef;   // J x q (internal fits)
  Eigen::MatrixXd out_design;
  bool internal = false;
  Family family = Family::gaussian;
  Eigen::VectorXd offset;
};

OutcomeModels fit_outcome_models(const PreparedData& prep, const RunConfig& cfg,
                                 const Eigen::VectorXd& y) {
  OutcomeModels out;
  const int J = prep.n_groups();
  const int n = prep.data.rows();

  const bool has_formula = !cfg.out_formula.empty();
  const bool has_cols = !cfg.out_cols.empty();
  if (has_formula == has_cols) {
    throw config_error(
        "augmentation needs exactly one of --out-formula and --out-cols");
  }

  if (has_cols) {
    if (static_cast<int>(cfg.out_cols.size()) != J) {
      throw config_error("--out-cols needs " + std::to_string(J) + " columns, got " +
                         std::to_string(cfg.out_cols.size()));
    }
    out.m.resize(n, J);
    for (int j = 0; j < J; ++j) out.m.col(j) = prep.data.numeric_column(cfg.out_cols[j]);
    out.internal = false;
    return out;
  }

  const Formula f = parse_formula(cfg.out_formula);
  if (!cfg.yname.empty() && f.response != cfg.yname) {
    throw config_error("outcome formula response '" + f.response +
                       "' must match --yname '" + cfg.yname + "'");
  }
  out.family = family_from_string(cfg.family);
  if (!cfg.offset_col.empty()) {
    if (out.family != Family::poisson) {
      throw config_error("--offset is only supported with --family poisson");
    }
    out.offset = prep.data.numeric_column(cfg.offset_col);
  }

  const DesignMatrix X = build_design_matrix(f, prep.data);
  out.out_design = X.values;
  out.internal = true;
  out.m.resize(n, J);
  out.out_coef.resize(J, X.cols());
  for (int j = 0; j < J; ++j) {
    std::vector<char> mask(n, 0);
    for (int i = 0; i < n; ++i) mask[i] = prep.z_index[i] == j ? 1 : 0;
    const GlmFit fit = fit_outcome_glm(X, y, out.family, mask, out.offset);
    out.m.col(j) = fit.fitted;
    out.out_coef.row(j) = fit.coefficients.transpose();
  }
  return out;
}

// one full re-estimation pass on given data; used directly and per bootstrap
// replicate
Eigen::VectorXd estimate_mu_once(const Dataset& d, const RunConfig& cfg,
                                 Scale scale) {
  PreparedData prep = prepare_propensity(d, cfg);
  WeightScheme scheme{scheme_from_string(cfg.weights.at(0)), -1};
  if (scheme.kind == Scheme::treated || !cfg.trtgrp.empty()) {
    scheme.treated_index = prep.treated_index(cfg.trtgrp);
  }
  const TiltedWeights tw = unit_weights(scheme, *prep.e, prep.z_index);
  const Eigen::VectorXd y = prep.data.numeric_column(cfg.yname);

  PotentialOutcomeMeans means;
  if (cfg.augmentation) {
    const OutcomeModels om = fit_outcome_models(prep, cfg, y);
    means = augmented_means(y, tw, prep.z_index, om.m);
  } else {
    means = hajek_means(y, tw, prep.z_index, prep.n_groups());
  }

  for (int j = 0; j < means.mu.size(); ++j) {
    if (scale == Scale::RR && !(means.mu[j] > 0.0)) {
      throw fit_error("replicate produced a non-positive potential outcome mean");
    }
    if (scale == Scale::OR && !(means.mu[j] > 0.0 && means.mu[j] < 1.0)) {
      throw fit_error("replicate produced a potential outcome mean outside (0,1)");
    }
  }
  return means.mu;
}

}  // namespace

EstimateResult run_estimate(const Dataset& d, const RunConfig& cfg) {
  if (cfg.yname.empty()) throw config_error("--yname is required for estimate");
  if (cfg.weights.empty()) throw config_error("estimate needs a --weight scheme");

  EstimateResult res;
  res.prep = prepare_propensity(d, cfg);
  res.scheme = WeightScheme{scheme_from_string(cfg.weights.at(0)), -1};
  if (res.scheme.kind == Scheme::treated || !cfg.trtgrp.empty()) {
    res.scheme.treated_index = res.prep.treated_index(cfg.trtgrp);
  }
  res.tw = unit_weights(res.scheme, *res.prep.e, res.prep.z_index);

  const Eigen::VectorXd y = res.prep.data.numeric_column(cfg.yname);
  const int J = res.prep.n_groups();

  OutcomeModels om;
  if (cfg.augmentation) {
    om = fit_outcome_models(res.prep, cfg, y);
    res.means = augmented_means(y, res.tw, res.prep.z_index, om.m);
  } else {
    res.means = hajek_means(y, res.tw, res.prep.z_index, J);
  }

  const Scale scale = scale_from_string(cfg.type);
  res.contrast = cfg.contrast.empty()
                     ? pairwise_contrasts(res.prep.labels, scale)
                     : parse_contrast(cfg.contrast, J, scale);
  res.point_estimates = apply_contrast(res.means, res.contrast);
  res.ess = effective_sample_size(res.tw, res.prep.z_index, J);

  if (cfg.bootstrap) {
    const int n_full = d.rows();
    const RunConfig replicate_cfg = cfg;
    const ReplicateFn refit = [&d, &replicate_cfg, scale](const std::vector<int>& rows) {
      return estimate_mu_once(d.subset(rows), replicate_cfg, scale);
    };
    res.var = bootstrap_variance(n_full, J, refit, cfg.replicates, cfg.seed);
    res.table = bootstrap_summary(res.var, res.means.mu, res.contrast);
  } else {
    StackedInputs inputs;
    inputs.y = y;
    inputs.z_index = res.prep.z_index;
    inputs.n_groups = J;
    inputs.scheme = res.scheme;
    inputs.e_values = res.prep.e->values();
    inputs.means = res.means;
    inputs.ps_internal = res.prep.ps_internal;
    if (res.prep.ps_internal) {
      inputs.ps_design = res.prep.ps_design;
      inputs.ps_coef = res.prep.ps_coef;
    }
    if (cfg.augmentation && om.internal) {
      inputs.out_internal = true;
      inputs.out_design = om.out_design;
      inputs.out_coef = om.out_coef;
      inputs.out_family = om.family;
      inputs.out_offset = om.offset;
    }
    const StackedSystem sys(std::move(inputs));
    res.var = sandwich_variance(sys);
    res.table = delta_transform(res.var, res.means.mu, res.contrast);
  }

  if (scale != Scale::DIF) res.exp_table = exponentiate(res.table);
  return res;
}

DesignResult run_design(const Dataset& d, const RunConfig& cfg) {
  DesignResult res;
  res.prep = prepare_propensity(d, cfg);

  std::vector<WeightScheme> schemes;
  for (const auto& name : cfg.weights) {
    WeightScheme s{scheme_from_string(name), -1};
    if (s.kind == Scheme::treated || !cfg.trtgrp.empty()) {
      s.treated_index = res.prep.treated_index(cfg.trtgrp);
    }
    schemes.push_back(s);
  }

  DesignMatrix covariates;
  if (res.prep.ps_internal) {
    covariates = build_design_matrix(parse_formula(cfg.ps_formula), res.prep.data);
  } else {
    if (cfg.covs.empty()) {
      throw config_error("--covs is required for balance checks with --ps-cols");
    }
    covariates.has_intercept = false;
    covariates.values.resize(res.prep.data.rows(), cfg.covs.size());
    for (size_t c = 0; c < cfg.covs.size(); ++c) {
      covariates.values.col(static_cast<int>(c)) =
          res.prep.data.numeric_column(cfg.covs[c]);
      covariates.column_names.push_back(cfg.covs[c]);
    }
  }

  BalanceOptions options;
  options.weighted_var = cfg.weighted_var;
  options.metric = cfg.metric;
  options.threshold = cfg.threshold;
  if (options.metric != "ASD" && options.metric != "PSD") {
    throw config_error("--metric must be ASD or PSD");
  }

  res.report = summarize_balance(covariates, *res.prep.e, schemes,
                                 res.prep.z_index, options);
  res.report.trim = res.prep.trim;
  return res;
}

json RunConfig::to_json() const {
  json j;
  j["command"] = command;
  j["data"] = data_path;
  j["ps_formula"] = ps_formula;
  j["ps_cols"] = ps_cols;
  j["zname"] = zname;
  j["trtgrp"] = trtgrp;
  j["delta"] = delta;
  j["optimal"] = optimal;
  j["weights"] = weights;
  j["weighted_var"] = weighted_var;
  j["metric"] = metric;
  j["threshold"] = threshold;
  j["covs"] = covs;
  j["yname"] = yname;
  j["augmentation"] = augmentation;
  j["out_formula"] = out_formula;
  j["out_cols"] = out_cols;
  j["family"] = family;
  j["offset"] = offset_col;
  j["bootstrap"] = bootstrap;
  j["replicates"] = replicates;
  j["seed"] = seed;
  j["contrast"] = contrast;
  j["type"] = type;
  j["ci"] = !no_ci;
  j["out"] = out_json;
  j["output"] = output_csv;
  j["plot_love"] = plot_love;
  j["plot_density"] = plot_density;
  j["plot_hist"] = plot_hist;
  j["scenario"] = scenario;
  j["n"] = n;
  j["emit_truth"] = emit_truth;
  j["truth_out"] = truth_out;
  j["oracle_draws"] = oracle_draws;
  return j;
}

json trim_to_json(const TrimResult& trim) {
  json j;
  j["delta"] = std::isnan(trim.delta_used) ? json(nullptr) : json(trim.delta_used);
  j["gamma_star"] = std::isnan(trim.gamma_star) ? json(nullptr) : json(trim.gamma_star);
  j["groups"] = trim.labels;
  j["trimmed"] = trim.trimmed_by_group;
  j["remained"] = trim.remained_by_group;
  j["total_trimmed"] = trim.total_trimmed();
  j["total_remained"] = trim.total_remained();
  return j;
}

json DesignResult::to_json(const RunConfig& cfg) const {
  json j;
  j["schema"] = "psw/1";
  j["config"] = cfg.to_json();
  j["groups"] = report.group_labels;
  j["group_sizes"] = report.group_sizes;
  j["covariates"] = report.covariates;
  j["metric"] = report.options.metric;
  j["weighted_var"] = report.options.weighted_var;
  j["threshold"] = report.options.threshold;
  j["clamped_propensities"] = report.clamp_count;

  json entries = json::array();
  for (const auto& entry : report.entries) {
    json e;
    e["scheme"] = entry.scheme_name;
    e["means"] = matrix_to_json(entry.means);
    e["vars"] = matrix_to_json(entry.vars);
    e["asd"] = vector_to_json(entry.asd);
    e["psd"] = vector_to_json(entry.psd);
    e["ess"] = vector_to_json(entry.ess);
    e["flagged"] = entry.flagged;
    entries.push_back(e);
  }
  j["balance"] = entries;
  j["trim"] = report.trim ? trim_to_json(*report.trim) : json(nullptr);
  return j;
}

json EstimateResult::to_json(const RunConfig& cfg) const {
  json j;
  j["schema"] = "psw/1";
  j["config"] = cfg.to_json();
  j["groups"] = prep.labels;
  j["weight"] = to_string(scheme.kind);
  j["augmented"] = means.augmented;
  j["mu"] = vector_to_json(means.mu);
  j["vcov_mu"] = matrix_to_json(var.vcov_mu);
  j["method"] =
      var.method == VarianceResult::Method::sandwich ? "sandwich" : "bootstrap";
  j["adjustments"] = var.adjustments;
  j["ess"] = vector_to_json(ess);
  j["clamped_propensities"] = tw.clamp_count;
  j["scale"] = to_string(contrast.scale);
  j["contrast_matrix"] = matrix_to_json(contrast.coef);

  json rows = json::array();
  for (size_t k = 0; k < table.rows.size(); ++k) {
    const auto& r = table.rows[k];
    json row;
    row["label"] = r.label;
    row["estimate"] = r.estimate;
    row["std_error"] = r.std_error;
    row["lwr"] = r.lwr;
    row["upr"] = r.upr;
    row["p_value"] = r.p_value;
    if (exp_table) {
      row["exp_estimate"] = exp_table->rows[k].estimate;
      row["exp_lwr"] = exp_table->rows[k].lwr;
      row["exp_upr"] = exp_table->rows[k].upr;
    }
    rows.push_back(row);
  }
  j["contrasts"] = rows;
  j["trim"] = prep.trim ? trim_to_json(*prep.trim) : json(nullptr);

  if (var.method == VarianceResult::Method::bootstrap) {
    json b;
    b["replicates"] = var.requested_replicates;
    b["failed"] = var.failed_replicates;
    b["draws"] = matrix_to_json(var.bootstrap_draws);
    j["bootstrap"] = b;
  }
  return j;
}

}  // namespace psw
