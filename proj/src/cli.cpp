#include "psw/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "psw/errors.hpp"
#include "psw/pipeline.hpp"
#include "psw/simulation.hpp"
#include "psw/svg.hpp"

namespace psw::cli {

namespace {

using nlohmann::json;

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open file for writing: " + path);
  out << j.dump(2) << "\n";
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void add_propensity_flags(CLI::App* cmd, RunConfig& cfg, std::string& weights_csv,
                          std::string& ps_cols_csv) {
  cmd->add_option("--data", cfg.data_path, "input CSV file")->required();
  cmd->add_option("--ps-formula", cfg.ps_formula,
                  "propensity model, e.g. \"z ~ x1 + x2 + factor(g)\"");
  cmd->add_option("--ps-cols", ps_cols_csv,
                  "externally estimated propensity columns (comma separated; a "
                  "single column is read as P(Z = treated group))");
  cmd->add_option("--zname", cfg.zname, "treatment column (required with --ps-cols)");
  cmd->add_option("--trtgrp", cfg.trtgrp,
                  "treated group label (default: last in lexicographic order)");
  auto* delta = cmd->add_option("--delta", cfg.delta, "symmetric trimming threshold");
  auto* optimal = cmd->add_flag("--optimal", cfg.optimal, "optimal trimming rule");
  delta->excludes(optimal);
  optimal->excludes(delta);
  cmd->add_option("--seed", cfg.seed, "random seed")->default_val(12345);
  (void)weights_csv;
}

void emit_design_outputs(const DesignResult& res, const RunConfig& cfg,
                         std::ostream& out) {
  if (!cfg.out_json.empty()) write_json_file(cfg.out_json, res.to_json(cfg));
  if (!cfg.plot_love.empty()) {
    write_text_file(cfg.plot_love, love_plot_svg(love_series(res.report)));
  }
  if (!cfg.plot_density.empty()) {
    write_text_file(cfg.plot_density,
                    density_plot_svg(density_series(*res.prep.e, res.prep.z_index)));
  }
  if (!cfg.plot_hist.empty()) {
    const int treated = res.prep.treated_index(cfg.trtgrp);
    write_text_file(cfg.plot_hist,
                    histogram_svg(histogram_series(*res.prep.e, res.prep.z_index,
                                                   treated)));
  }
  if (res.prep.trim) out << format_trim_table(*res.prep.trim) << "\n";
  out << "weights estimated for: ";
  for (size_t i = 1; i < res.report.entries.size(); ++i) {
    out << (i > 1 ? " " : "") << res.report.entries[i].scheme_name;
  }
  out << "\n";
  if (res.report.clamp_count > 0) {
    out << "note: " << res.report.clamp_count
        << " propensity values clamped to [1e-06, 1-1e-06]\n";
  }
}

int cmd_design(RunConfig cfg, std::ostream& out) {
  const Dataset data = Dataset::from_csv_file(cfg.data_path);
  const DesignResult res = run_design(data, cfg);
  emit_design_outputs(res, cfg, out);
  return 0;
}

int cmd_trim(RunConfig cfg, std::ostream& out, std::ostream& err) {
  const Dataset data = Dataset::from_csv_file(cfg.data_path);
  // no refit here: the command returns the kept rows verbatim
  const PreparedData prep = prepare_propensity(data, cfg, /*refit_after_trim=*/false);

  // delta = 0 keeps everything; the two-row table is reported either way
  const TrimResult trim =
      prep.trim ? *prep.trim : symmetric_trim(*prep.e, 0.0, prep.z_index);

  if (!cfg.output_csv.empty()) {
    write_csv_file(cfg.output_csv, prep.data.table());
    out << format_trim_table(trim);
  } else {
    write_csv(out, prep.data.table());
    err << format_trim_table(trim);
  }
  if (!cfg.out_json.empty()) {
    json j;
    j["schema"] = "psw/1";
    j["config"] = cfg.to_json();
    j["trim"] = trim_to_json(trim);
    write_json_file(cfg.out_json, j);
  }
  return 0;
}

int cmd_estimate(RunConfig cfg, std::ostream& out) {
  const Dataset data = Dataset::from_csv_file(cfg.data_path);
  if (cfg.augmentation && cfg.out_formula.empty() && cfg.out_cols.empty()) {
    throw config_error(
        "--augmentation needs --out-formula or --out-cols");
  }
  if (!cfg.augmentation && (!cfg.out_formula.empty() || !cfg.out_cols.empty())) {
    throw config_error("--out-formula/--out-cols require --augmentation");
  }
  const EstimateResult res = run_estimate(data, cfg);

  if (res.prep.trim) out << format_trim_table(*res.prep.trim) << "\n";
  out << render_summary(res.table, res.contrast, res.prep.labels, !cfg.no_ci);
  if (res.exp_table) {
    out << "\nExponentiated (" << cfg.type << " scale):\n";
    for (const auto& row : res.exp_table->rows) {
      std::ostringstream line;
      line.setf(std::ios::fixed);
      line.precision(6);
      line << row.label << "  " << row.estimate << "  [" << row.lwr << ", "
           << row.upr << "]";
      out << line.str() << "\n";
    }
  }
  if (res.tw.clamp_count > 0) {
    out << "note: " << res.tw.clamp_count
        << " propensity values clamped to [1e-06, 1-1e-06]\n";
  }
  if (!cfg.out_json.empty()) write_json_file(cfg.out_json, res.to_json(cfg));
  return 0;
}

int cmd_simulate(RunConfig cfg, std::ostream& out) {
  const Scenario& scenario = builtin_scenario(cfg.scenario);
  const Dataset data = generate(scenario, cfg.n, cfg.seed);
  if (!cfg.output_csv.empty()) {
    write_csv_file(cfg.output_csv, data.table());
  } else {
    write_csv(out, data.table());
  }

  if (!cfg.emit_truth.empty()) {
    WeightScheme scheme{scheme_from_string(cfg.emit_truth), -1};
    const WateOracle oracle = true_wate(scenario, scheme, cfg.oracle_draws, cfg.seed);
    json j;
    j["schema"] = "psw/1";
    j["config"] = cfg.to_json();
    j["scenario"] = cfg.scenario;
    j["scheme"] = cfg.emit_truth;
    j["groups"] = oracle.labels;
    j["draws"] = oracle.draws;
    json mu = json::array(), mu_se = json::array();
    for (int k = 0; k < oracle.mu.size(); ++k) {
      mu.push_back(oracle.mu[k]);
      mu_se.push_back(oracle.mu_se[k]);
    }
    j["mu"] = mu;
    j["mu_mc_se"] = mu_se;
    json pairs = json::array();
    for (int a = 0; a < oracle.mu.size(); ++a) {
      for (int b = 0; b < a; ++b) {
        json p;
        p["contrast"] = oracle.labels[a] + " - " + oracle.labels[b];
        p["value"] = oracle.pairwise(a, b);
        p["mc_se"] = oracle.pairwise_se(a, b);
        pairs.push_back(p);
      }
    }
    j["pairwise"] = pairs;
    std::string path = cfg.truth_out;
    if (path.empty()) {
      path = cfg.output_csv.empty() ? "truth.json" : cfg.output_csv + ".truth.json";
    }
    write_json_file(path, j);
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"propensity score weighting toolkit"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string weights_csv = "overlap";
  std::string ps_cols_csv, out_cols_csv, covs_csv;

  auto* design = app.add_subcommand(
      "design", "fit or import propensity scores and report covariate balance");
  add_propensity_flags(design, cfg, weights_csv, ps_cols_csv);
  design->add_option("--weights", weights_csv,
                     "weight schemes, comma separated "
                     "(ipw|treated|overlap|matching|entropy)");
  design->add_option("--covs", covs_csv, "balance covariates (with --ps-cols)");
  design->add_option("--weighted-var", cfg.weighted_var,
                     "use weighted variances in balance metrics");
  design->add_option("--metric", cfg.metric, "balance metric (ASD|PSD)");
  design->add_option("--threshold", cfg.threshold, "balance flag threshold");
  design->add_option("--out", cfg.out_json, "balance report JSON path");
  design->add_option("--plot-love", cfg.plot_love, "love plot SVG path");
  design->add_option("--plot-density", cfg.plot_density, "density plot SVG path");
  design->add_option("--plot-hist", cfg.plot_hist, "histogram SVG path (binary only)");

  auto* trim = app.add_subcommand("trim", "trim the data set on propensity scores");
  add_propensity_flags(trim, cfg, weights_csv, ps_cols_csv);
  trim->add_option("--output", cfg.output_csv, "trimmed CSV path (default: stdout)");
  trim->add_option("--out", cfg.out_json, "trim summary JSON path");

  auto* estimate = app.add_subcommand(
      "estimate", "estimate average potential outcomes and causal contrasts");
  add_propensity_flags(estimate, cfg, weights_csv, ps_cols_csv);
  estimate->add_option("--yname", cfg.yname, "outcome column")->required();
  estimate->add_option("--weight", weights_csv,
                       "weight scheme (ipw|treated|overlap|matching|entropy)");
  estimate->add_flag("--augmentation", cfg.augmentation,
                     "augmented (outcome-regression) estimator");
  estimate->add_option("--out-formula", cfg.out_formula, "outcome model formula");
  estimate->add_option("--out-cols", out_cols_csv,
                       "externally estimated potential outcome columns");
  estimate->add_option("--family", cfg.family,
                       "outcome family (gaussian|binomial|poisson)");
  estimate->add_option("--offset", cfg.offset_col, "log-exposure column (poisson)");
  estimate->add_flag("--bootstrap", cfg.bootstrap, "bootstrap variance");
  estimate->add_option("--replicates", cfg.replicates, "bootstrap replicates")
      ->default_val(50);
  estimate->add_option("--contrast", cfg.contrast,
                       "contrast rows, e.g. \"1,-1,0;1,0,-1\" (default: all "
                       "pairwise)");
  estimate->add_option("--type", cfg.type, "contrast scale (DIF|RR|OR)");
  estimate->add_flag("--no-ci", cfg.no_ci, "print z statistics instead of intervals");
  estimate->add_option("--out", cfg.out_json, "estimate JSON path");

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
  simulate->add_option("--scenario", cfg.scenario, "scenario name (A|Ahet|B|C|D)")
      ->required();
  simulate->add_option("--n", cfg.n, "sample size")->required();
  simulate->add_option("--seed", cfg.seed, "random seed")->default_val(12345);
  simulate->add_option("--out", cfg.output_csv, "CSV path (default: stdout)");
  simulate->add_option("--emit-truth", cfg.emit_truth,
                       "also write the oracle WATE for this scheme");
  simulate->add_option("--truth-out", cfg.truth_out, "oracle JSON path");
  simulate->add_option("--draws", cfg.oracle_draws, "oracle Monte Carlo draws")
      ->default_val(1000000);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: config: " << e.what() << "\n";
    return 2;
  }

  cfg.weights = split_list(weights_csv);
  cfg.ps_cols = split_list(ps_cols_csv);
  cfg.out_cols = split_list(out_cols_csv);
  cfg.covs = split_list(covs_csv);

  try {
    if (design->parsed()) {
      cfg.command = "design";
      return cmd_design(cfg, out);
    }
    if (trim->parsed()) {
      cfg.command = "trim";
      return cmd_trim(cfg, out, err);
    }
    if (estimate->parsed()) {
      cfg.command = "estimate";
      return cmd_estimate(cfg, out);
    }
    cfg.command = "simulate";
    return cmd_simulate(cfg, out);
  } catch (const config_error& e) {
    err << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const data_error& e) {
    err << "error: data: " << e.what() << "\n";
    return 3;
  } catch (const fit_error& e) {
    err << "error: fit: " << e.what() << "\n";
    return 4;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace psw::cli
