#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "psw/balance.hpp"
#include "psw/dataset.hpp"
#include "psw/estimation.hpp"
#include "psw/inference.hpp"
#include "psw/trimming.hpp"
#include "psw/weights.hpp"

namespace psw {

// Resolved run configuration shared by all subcommands; embedded in every
// JSON output for provenance.
struct RunConfig {
  std::string command;
  std::string data_path;

  // propensity side: a model formula or externally estimated columns
  std::string ps_formula;
  std::vector<std::string> ps_cols;
  std::string zname;   // required with ps_cols
  std::string trtgrp;  // empty = last label in lexicographic order

  double delta = 0.0;
  bool optimal = false;

  std::vector<std::string> weights = {"overlap"};
  bool weighted_var = true;
  std::string metric = "ASD";
  double threshold = 0.1;
  std::vector<std::string> covs;  // balance covariates with external ps

  std::string yname;
  bool augmentation = false;
  std::string out_formula;
  std::vector<std::string> out_cols;
  std::string family = "gaussian";
  std::string offset_col;

  bool bootstrap = false;
  int replicates = 50;
  std::uint64_t seed = 12345;
  std::string contrast;
  std::string type = "DIF";
  bool no_ci = false;

  std::string out_json;
  std::string output_csv;
  std::string plot_love;
  std::string plot_density;
  std::string plot_hist;

  std::string scenario;
  int n = 1000;
  std::string emit_truth;
  std::string truth_out;
  long oracle_draws = 1000000;

  nlohmann::json to_json() const;
};

// Data after propensity estimation and (optional) trimming with refit.
struct PreparedData {
  Dataset data;                     // kept rows
  std::vector<std::string> labels;  // full label set, lexicographic
  std::vector<int> z_index;         // kept rows
  std::optional<PropensityMatrix> e;
  std::optional<TrimResult> trim;   // counts over the full data

  bool ps_internal = false;
  Eigen::MatrixXd ps_design;  // kept rows (internal fits)
  Eigen::MatrixXd ps_coef;    // (J-1) x q baseline-category
  int ps_iterations = 0;

  int n_groups() const { return static_cast<int>(labels.size()); }
  int treated_index(const std::string& trtgrp) const;
};

// Fits (or imports) propensity scores, then trims and refits when requested.
PreparedData prepare_propensity(const Dataset& d, const RunConfig& cfg,
                                bool refit_after_trim = true);

struct EstimateResult {
  PreparedData prep;
  WeightScheme scheme;
  TiltedWeights tw;
  PotentialOutcomeMeans means;
  VarianceResult var;
  ContrastSpec contrast;
  SummaryTable table;                     // analysis scale (log for RR/OR)
  std::optional<SummaryTable> exp_table;  // exponentiated RR/OR
  Eigen::VectorXd ess;
  Eigen::VectorXd point_estimates;

  nlohmann::json to_json(const RunConfig& cfg) const;
};

EstimateResult run_estimate(const Dataset& d, const RunConfig& cfg);

struct DesignResult {
  PreparedData prep;
  BalanceReport report;

  nlohmann::json to_json(const RunConfig& cfg) const;
};

DesignResult run_design(const Dataset& d, const RunConfig& cfg);

nlohmann::json trim_to_json(const TrimResult& trim);

}  // namespace psw
