#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "spenc/evaluate.hpp"
#include "spenc/fit.hpp"
#include "spenc/io.hpp"
#include "spenc/serialize.hpp"
#include "spenc/synthetic.hpp"

namespace spenc {

namespace detail {

inline std::string fmt9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

}  // namespace detail

// Matrix CSV with a one-line header; numeric fields use 9 significant
// digits.
inline void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path,
                             const std::string& col_prefix) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  for (long c = 0; c < m.cols(); ++c) {
    out << col_prefix << c << (c + 1 < m.cols() ? "," : "\n");
  }
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      out << detail::fmt9(m(r, c)) << (c + 1 < m.cols() ? "," : "\n");
    }
  }
  if (!out) throw FormatError(path + ": write failed");
}

// Real-valued CSV reader; skips one header line when the first field is not
// numeric. Counterpart of write_matrix_csv for round-trip checks.
inline Eigen::MatrixXd read_real_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open file");
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::strip(line);
    if (t.empty()) continue;
    const auto fields = detail::split(t, ',');
    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    for (const auto& f : fields) {
      const std::string ft = detail::strip(f);
      char* end = nullptr;
      const double v = std::strtod(ft.c_str(), &end);
      if (ft.empty() || end != ft.c_str() + ft.size()) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (line_no == 1) continue;  // header
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        ": non-numeric field");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(static_cast<long>(rows.size()),
                    static_cast<long>(rows[0].size()));
  for (long r = 0; r < m.rows(); ++r) {
    if (static_cast<long>(rows[static_cast<std::size_t>(r)].size()) !=
        m.cols()) {
      throw FormatError(path + ": ragged rows");
    }
    for (long c = 0; c < m.cols(); ++c) {
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  return m;
}

// Binary PPM (P6) heatmap: each cell maps to one grey byte scaled by the
// matrix maximum, replicated across the three channels.
inline void write_ppm(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  out << "P6\n" << m.cols() << " " << m.rows() << "\n255\n";
  const double mx = m.maxCoeff();
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      double v = mx > 0.0 ? m(r, c) / mx : 0.0;
      v = std::min(std::max(v, 0.0), 1.0);
      const unsigned char byte =
          static_cast<unsigned char>(std::lround(255.0 * v));
      const char px[3] = {static_cast<char>(byte), static_cast<char>(byte),
                          static_cast<char>(byte)};
      out.write(px, 3);
    }
  }
  if (!out) throw FormatError(path + ": write failed");
}

enum class SyntheticKind { noise, linear, nonlinear };

inline std::string kind_name(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::noise:
      return "noise";
    case SyntheticKind::linear:
      return "linear";
    case SyntheticKind::nonlinear:
    default:
      return "nonlinear";
  }
}

inline SyntheticKind kind_from_name(const std::string& s) {
  if (s == "noise") return SyntheticKind::noise;
  if (s == "linear") return SyntheticKind::linear;
  if (s == "nonlinear") return SyntheticKind::nonlinear;
  throw ConfigError("unknown dataset kind '" + s + "'");
}

struct SimulateOptions {
  SyntheticKind kind = SyntheticKind::noise;
  long rows = 5000;
  long cols = 30;
  double rate = 1.0;
  std::uint64_t seed = 0;
  std::string out_dir;
};

// Writes Y.mtx and truth.json into the output directory.
inline SyntheticData cmd_simulate(const SimulateOptions& opt) {
  std::filesystem::create_directories(opt.out_dir);
  SyntheticData data =
      opt.kind == SyntheticKind::noise
          ? gen_poisson_noise(opt.rows, opt.cols, opt.rate, opt.seed)
          : (opt.kind == SyntheticKind::linear
                 ? gen_linear_factor(opt.rows, opt.cols, opt.seed)
                 : gen_nonlinear_factor(opt.rows, opt.cols, opt.seed));
  save_matrix(data.counts, opt.out_dir + "/Y.mtx",
              MatrixFormat::matrix_market);
  Json truth = truth_to_json(data.truth);
  truth["kind"] = kind_name(opt.kind);
  truth["rows"] = opt.rows;
  truth["cols"] = opt.cols;
  truth["seed"] = opt.seed;
  write_json(truth, opt.out_dir + "/truth.json");
  return data;
}

struct FitOptions {
  std::string data_path;
  std::optional<MatrixFormat> format;
  std::string out_dir;
  ModelConfig model;
  TrainConfig train;
  bool heatmaps = true;
};

inline void write_fit_artifacts(const FitResult& fit,
                                const std::string& out_dir, bool heatmaps) {
  std::filesystem::create_directories(out_dir);
  write_json(fit_to_json(fit), out_dir + "/fit.json");
  write_matrix_csv(fit.alpha_mean, out_dir + "/alpha.csv", "k");
  write_matrix_csv(fit.alpha_sd, out_dir + "/alpha_sd.csv", "k");
  write_matrix_csv(fit.beta_mean, out_dir + "/beta.csv", "i");
  {
    std::ofstream out(out_dir + "/phi.csv", std::ios::binary);
    if (!out) throw FormatError(out_dir + "/phi.csv: cannot open");
    out << "item,mean,sd\n";
    for (long i = 0; i < fit.phi_mean.size(); ++i) {
      out << i << "," << detail::fmt9(fit.phi_mean[i]) << ","
          << detail::fmt9(fit.phi_sd[i]) << "\n";
    }
  }
  {
    std::ofstream out(out_dir + "/elbo.csv", std::ios::binary);
    if (!out) throw FormatError(out_dir + "/elbo.csv: cannot open");
    out << "step,elbo\n";
    for (const auto& [step, value] : fit.state.elbo_trace) {
      out << step << "," << detail::fmt9(value) << "\n";
    }
  }
  if (heatmaps) {
    write_ppm(fit.alpha_mean, out_dir + "/alpha.ppm");
    write_ppm(fit.beta_mean, out_dir + "/beta.ppm");
  }
}

inline FitResult cmd_fit(const FitOptions& opt) {
  const MatrixFormat fmt =
      opt.format ? *opt.format : infer_format(opt.data_path);
  const CountMatrix Y = load_matrix(opt.data_path, fmt);
  FitResult fit_result = fit(Y, opt.model, opt.train);
  write_fit_artifacts(fit_result, opt.out_dir, opt.heatmaps);
  return fit_result;
}

struct TransformOptions {
  std::string fit_path;
  std::string data_path;
  std::optional<MatrixFormat> format;
  std::string out_dir;
};

inline Eigen::MatrixXd cmd_transform(const TransformOptions& opt) {
  const FitResult fit = fit_from_json(read_json(opt.fit_path));
  const MatrixFormat fmt =
      opt.format ? *opt.format : infer_format(opt.data_path);
  const CountMatrix Y = load_matrix(opt.data_path, fmt);
  const Eigen::MatrixXd theta =
      transform_new(fit, Y, fit.model_config.xi_mode);
  std::filesystem::create_directories(opt.out_dir);
  write_matrix_csv(theta, opt.out_dir + "/theta.csv", "k");
  return theta;
}

struct EvaluateOptions {
  std::string fit_path;
  std::string data_path;
  std::optional<MatrixFormat> format;
  std::string out_dir;
  bool want_waic = false;
  WaicUnit waic_unit = WaicUnit::entry;
  long waic_draws = 200;
  bool want_partition = false;
  double gate_threshold = 0.5;
  std::optional<long> stratify_factor;
  std::vector<double> stratify_quantiles;
  double support_threshold = 0.0;
};

struct EvaluateOutputs {
  std::optional<WaicReport> waic_report;
  std::optional<FeaturePartition> partition;
  std::optional<Stratification> stratification;
};

inline EvaluateOutputs cmd_evaluate(const EvaluateOptions& opt) {
  const FitResult fit = fit_from_json(read_json(opt.fit_path));
  const MatrixFormat fmt =
      opt.format ? *opt.format : infer_format(opt.data_path);
  const CountMatrix Y = load_matrix(opt.data_path, fmt);
  std::filesystem::create_directories(opt.out_dir);
  EvaluateOutputs out;
  if (opt.want_waic) {
    out.waic_report = waic(fit, Y, opt.waic_draws, opt.waic_unit);
    write_json(waic_to_json(*out.waic_report), opt.out_dir + "/waic.json");
  }
  if (opt.want_partition) {
    out.partition = feature_partition(fit, opt.gate_threshold);
    Json j = partition_to_json(*out.partition);
    j["phi_mean"] = json_vector(fit.phi_mean);
    write_json(j, opt.out_dir + "/partition.json");
  }
  if (opt.stratify_factor) {
    const Eigen::MatrixXd theta =
        transform_new(fit, Y, fit.model_config.xi_mode);
    out.stratification =
        stratify(fit, theta, *opt.stratify_factor, opt.stratify_quantiles,
                 1.0, opt.support_threshold);
    write_json(stratification_to_json(*out.stratification),
               opt.out_dir + "/rules.json");
  }
  return out;
}

struct ExportOptions {
  std::string fit_path;
  std::string out_dir;
  bool heatmaps = true;
};

// Regenerates the CSV/PPM artifact set from a stored fit document.
inline void cmd_export(const ExportOptions& opt) {
  const FitResult fit = fit_from_json(read_json(opt.fit_path));
  write_fit_artifacts(fit, opt.out_dir, opt.heatmaps);
}

}  // namespace spenc
