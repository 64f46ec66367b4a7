// spenc: sparsely-encoded hierarchical Poisson matrix factorization.
//
// Subcommands: simulate, fit, transform, evaluate, export. Config values
// resolve as CLI flag > JSON config file (--config) > built-in default. All
// outputs are deterministic for a fixed seed.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "spenc/pipeline.hpp"

namespace {

using spenc::Json;

spenc::MatrixFormat format_from_name(const std::string& name) {
  if (name == "mtx" || name == "matrix-market") {
    return spenc::MatrixFormat::matrix_market;
  }
  if (name == "csv" || name == "csv-dense") {
    return spenc::MatrixFormat::csv_dense;
  }
  if (name == "triplet" || name == "csv-triplet") {
    return spenc::MatrixFormat::csv_triplet;
  }
  throw spenc::ConfigError("unknown format '" + name + "'");
}

// One machine-parsable record per failure.
int fail(const std::string& command, const std::exception& e) {
  Json rec{{"command", command}, {"error", e.what()}};
  std::cerr << "spenc-error: " << rec.dump() << "\n";
  return 1;
}

struct ConfigFile {
  Json j = Json::object();

  void load(const std::string& path) { j = spenc::read_json(path); }

  template <typename T>
  void fill(const CLI::App* cmd, const std::string& flag,
            const std::string& key, T& target) const {
    if (cmd->count(flag) == 0 && j.contains(key)) {
      target = j.at(key).get<T>();
    }
  }
};

void add_model_train_flags(CLI::App* cmd, spenc::ModelConfig& model,
                           spenc::TrainConfig& train, std::string& link,
                           std::string& xi) {
  cmd->add_option("--k", model.factors, "Number of factors");
  cmd->add_option("--link", link, "Link function: identity or log");
  cmd->add_option("--xi", xi, "User scales: unit or overdispersed");
  cmd->add_option("--seed", train.seed, "Random seed");
  cmd->add_option("--epochs", train.epochs, "Training epochs");
  cmd->add_option("--lr", train.learning_rate, "Learning rate");
  cmd->add_option("--batch-size", train.batch_size, "Minibatch size");
  cmd->add_option("--mc-samples", train.mc_samples,
                  "Monte Carlo samples per gradient step");
  cmd->add_option("--lookahead-k", train.lookahead_k,
                  "Lookahead synchronization period");
  cmd->add_option("--lookahead-alpha", train.lookahead_alpha,
                  "Lookahead interpolation factor");
  cmd->add_option("--theta-scale", train.theta_scale,
                  "Amortized representation posterior width (0 = point mass)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparsely-encoded Poisson matrix factorization"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  std::string sim_kind = "noise";
  spenc::SimulateOptions sim_opt;
  sim->add_option("--kind", sim_kind, "noise, linear or nonlinear")
      ->required();
  sim->add_option("--rows", sim_opt.rows, "Number of rows (users)");
  sim->add_option("--cols", sim_opt.cols, "Number of columns (items)");
  sim->add_option("--rate", sim_opt.rate, "Noise rate (noise kind only)");
  sim->add_option("--seed", sim_opt.seed, "Random seed");
  sim->add_option("--out", sim_opt.out_dir, "Output directory")->required();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit the factorization model");
  spenc::FitOptions fit_opt;
  std::string fit_link = "identity", fit_xi = "unit", fit_format;
  std::string fit_config_path;
  bool no_heatmaps = false;
  fit_cmd->add_option("--data", fit_opt.data_path, "Count matrix path")
      ->required();
  fit_cmd->add_option("--format", fit_format,
                      "Input format: mtx, csv or triplet");
  fit_cmd->add_option("--out", fit_opt.out_dir, "Output directory")
      ->required();
  fit_cmd->add_option("--config", fit_config_path, "JSON config file");
  fit_cmd->add_flag("--no-heatmaps", no_heatmaps, "Skip PPM heatmaps");
  add_model_train_flags(fit_cmd, fit_opt.model, fit_opt.train, fit_link,
                        fit_xi);

  // transform
  auto* tr = app.add_subcommand("transform",
                                "Encode new data with a fitted model");
  spenc::TransformOptions tr_opt;
  std::string tr_format;
  tr->add_option("--fit", tr_opt.fit_path, "fit.json path")->required();
  tr->add_option("--data", tr_opt.data_path, "Count matrix path")->required();
  tr->add_option("--format", tr_format, "Input format: mtx, csv or triplet");
  tr->add_option("--out", tr_opt.out_dir, "Output directory")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Model criticism on a dataset");
  spenc::EvaluateOptions ev_opt;
  std::string ev_format, ev_unit = "entry";
  std::vector<std::string> stratify_args;
  ev->add_option("--fit", ev_opt.fit_path, "fit.json path")->required();
  ev->add_option("--data", ev_opt.data_path, "Count matrix path")->required();
  ev->add_option("--format", ev_format, "Input format: mtx, csv or triplet");
  ev->add_option("--out", ev_opt.out_dir, "Output directory")->required();
  ev->add_flag("--waic", ev_opt.want_waic, "Write waic.json");
  ev->add_option("--waic-unit", ev_unit, "Pointwise unit: entry or user-row");
  ev->add_option("--waic-draws", ev_opt.waic_draws, "Posterior draws");
  ev->add_flag("--partition", ev_opt.want_partition, "Write partition.json");
  ev->add_option("--gate-threshold", ev_opt.gate_threshold,
                 "Factor/background gate threshold");
  ev->add_option("--stratify", stratify_args,
                 "Factor index and comma-separated quantiles")
      ->expected(2);
  ev->add_option("--support-threshold", ev_opt.support_threshold,
                 "Relative support cutoff for rules");

  // export
  auto* ex = app.add_subcommand("export",
                                "Regenerate artifacts from fit.json");
  spenc::ExportOptions ex_opt;
  bool ex_no_heatmaps = false;
  ex->add_option("--fit", ex_opt.fit_path, "fit.json path")->required();
  ex->add_option("--out", ex_opt.out_dir, "Output directory")->required();
  ex->add_flag("--no-heatmaps", ex_no_heatmaps, "Skip PPM heatmaps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "spenc: " << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return 2;
  }

  try {
    if (sim->parsed()) {
      sim_opt.kind = spenc::kind_from_name(sim_kind);
      if (sim_opt.kind != spenc::SyntheticKind::noise && sim_opt.cols < 3) {
        throw spenc::ConfigError(
            "structured kinds need at least 3 columns");
      }
      spenc::cmd_simulate(sim_opt);
      return 0;
    }
    if (fit_cmd->parsed()) {
      if (!fit_config_path.empty()) {
        ConfigFile cfg;
        cfg.load(fit_config_path);
        cfg.fill(fit_cmd, "--k", "factors", fit_opt.model.factors);
        cfg.fill(fit_cmd, "--link", "link", fit_link);
        cfg.fill(fit_cmd, "--xi", "xi_mode", fit_xi);
        cfg.fill(fit_cmd, "--seed", "seed", fit_opt.train.seed);
        cfg.fill(fit_cmd, "--epochs", "epochs", fit_opt.train.epochs);
        cfg.fill(fit_cmd, "--lr", "learning_rate",
                 fit_opt.train.learning_rate);
        cfg.fill(fit_cmd, "--batch-size", "batch_size",
                 fit_opt.train.batch_size);
        cfg.fill(fit_cmd, "--mc-samples", "mc_samples",
                 fit_opt.train.mc_samples);
        cfg.fill(fit_cmd, "--lookahead-k", "lookahead_k",
                 fit_opt.train.lookahead_k);
        cfg.fill(fit_cmd, "--lookahead-alpha", "lookahead_alpha",
                 fit_opt.train.lookahead_alpha);
        cfg.fill(fit_cmd, "--theta-scale", "theta_scale",
                 fit_opt.train.theta_scale);
      }
      fit_opt.model.link = spenc::link_from_name(fit_link);
      fit_opt.model.xi_mode = fit_xi == "unit"
                                  ? spenc::XiMode::unit
                                  : spenc::XiMode::overdispersed;
      if (!fit_format.empty()) fit_opt.format = format_from_name(fit_format);
      fit_opt.heatmaps = !no_heatmaps;
      const spenc::FitResult result = spenc::cmd_fit(fit_opt);
      for (const auto& w : result.warnings) {
        std::cerr << "spenc: warning: " << w << "\n";
      }
      return 0;
    }
    if (tr->parsed()) {
      if (!tr_format.empty()) tr_opt.format = format_from_name(tr_format);
      spenc::cmd_transform(tr_opt);
      return 0;
    }
    if (ev->parsed()) {
      if (!ev_format.empty()) ev_opt.format = format_from_name(ev_format);
      ev_opt.waic_unit = spenc::waic_unit_from_name(ev_unit);
      if (!stratify_args.empty()) {
        ev_opt.stratify_factor = std::stol(stratify_args[0]);
        for (const auto& tok :
             spenc::detail::split(stratify_args[1], ',')) {
          ev_opt.stratify_quantiles.push_back(std::stod(tok));
        }
      }
      if (!ev_opt.want_waic && !ev_opt.want_partition &&
          !ev_opt.stratify_factor) {
        throw spenc::ConfigError(
            "nothing to do: pass --waic, --partition and/or --stratify");
      }
      spenc::cmd_evaluate(ev_opt);
      return 0;
    }
    if (ex->parsed()) {
      ex_opt.heatmaps = !ex_no_heatmaps;
      spenc::cmd_export(ex_opt);
      return 0;
    }
  } catch (const std::exception& e) {
    return fail(app.get_subcommands().front()->get_name(), e);
  }
  return 0;
}
