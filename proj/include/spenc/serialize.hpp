#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spenc/evaluate.hpp"
#include "spenc/fit.hpp"
#include "spenc/synthetic.hpp"

namespace spenc {

using Json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "float arrays are serialized little-endian");

namespace b64 {

inline constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string encode_bytes(const unsigned char* data, std::size_t n) {
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  for (std::size_t i = 0; i < n; i += 3) {
    const unsigned b0 = data[i];
    const unsigned b1 = i + 1 < n ? data[i + 1] : 0;
    const unsigned b2 = i + 2 < n ? data[i + 2] : 0;
    out.push_back(kAlphabet[b0 >> 2]);
    out.push_back(kAlphabet[((b0 & 0x3) << 4) | (b1 >> 4)]);
    out.push_back(i + 1 < n ? kAlphabet[((b1 & 0xF) << 2) | (b2 >> 6)] : '=');
    out.push_back(i + 2 < n ? kAlphabet[b2 & 0x3F] : '=');
  }
  return out;
}

inline int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

inline std::vector<unsigned char> decode_bytes(const std::string& s) {
  if (s.size() % 4 != 0) throw FormatError("base64 length not multiple of 4");
  std::vector<unsigned char> out;
  out.reserve(s.size() / 4 * 3);
  for (std::size_t i = 0; i < s.size(); i += 4) {
    int v[4] = {0, 0, 0, 0};
    int pads = 0;
    for (int j = 0; j < 4; ++j) {
      const char c = s[i + j];
      if (c == '=') {
        ++pads;
        continue;
      }
      v[j] = decode_char(c);
      if (v[j] < 0 || pads > 0) throw FormatError("bad base64 character");
    }
    out.push_back(static_cast<unsigned char>((v[0] << 2) | (v[1] >> 4)));
    if (pads < 2) {
      out.push_back(static_cast<unsigned char>((v[1] << 4) | (v[2] >> 2)));
    }
    if (pads < 1) {
      out.push_back(static_cast<unsigned char>((v[2] << 6) | v[3]));
    }
  }
  return out;
}

}  // namespace b64

inline std::string encode_doubles(const double* data, long n) {
  return b64::encode_bytes(reinterpret_cast<const unsigned char*>(data),
                           static_cast<std::size_t>(n) * sizeof(double));
}

inline std::string encode_doubles(const Eigen::VectorXd& v) {
  return encode_doubles(v.data(), v.size());
}

inline Eigen::VectorXd decode_doubles(const std::string& s) {
  const auto bytes = b64::decode_bytes(s);
  if (bytes.size() % sizeof(double) != 0) {
    throw FormatError("base64 payload is not a doubles array");
  }
  Eigen::VectorXd out(static_cast<long>(bytes.size() / sizeof(double)));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

// Doubles destined for human-readable JSON carry 9 significant digits.
inline double round9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return std::strtod(buf, nullptr);
}

inline Json json_vector(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(round9(v[i]));
  return a;
}

inline Eigen::VectorXd vector_from_json(const Json& a) {
  Eigen::VectorXd v(static_cast<long>(a.size()));
  for (long i = 0; i < v.size(); ++i) {
    v[i] = a[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

// Readable matrices: row-major data list with explicit shape.
inline Json json_matrix(const Eigen::MatrixXd& m) {
  Json data = Json::array();
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) data.push_back(round9(m(r, c)));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Eigen::MatrixXd matrix_from_json(const Json& j) {
  const long rows = j.at("rows").get<long>();
  const long cols = j.at("cols").get<long>();
  const Json& data = j.at("data");
  if (static_cast<long>(data.size()) != rows * cols) {
    throw FormatError("matrix payload size mismatch");
  }
  Eigen::MatrixXd m(rows, cols);
  long idx = 0;
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      m(r, c) = data[static_cast<std::size_t>(idx++)].get<double>();
    }
  }
  return m;
}

// Bulk matrices: row-major doubles, base64.
inline Json json_matrix_b64(const Eigen::MatrixXd& m) {
  std::vector<double> rowmajor(static_cast<std::size_t>(m.size()));
  long idx = 0;
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      rowmajor[static_cast<std::size_t>(idx++)] = m(r, c);
    }
  }
  return Json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"data_b64", rowmajor.empty()
                               ? std::string()
                               : encode_doubles(rowmajor.data(),
                                                static_cast<long>(
                                                    rowmajor.size()))}};
}

inline Eigen::MatrixXd matrix_from_json_b64(const Json& j) {
  const long rows = j.at("rows").get<long>();
  const long cols = j.at("cols").get<long>();
  Eigen::MatrixXd m(rows, cols);
  if (rows * cols == 0) return m;
  const Eigen::VectorXd flat =
      decode_doubles(j.at("data_b64").get<std::string>());
  if (flat.size() != rows * cols) {
    throw FormatError("matrix payload size mismatch");
  }
  long idx = 0;
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) m(r, c) = flat[idx++];
  }
  return m;
}

// ---- VariationalState checkpoint ----

inline Json checkpoint_to_json(const VariationalState& state) {
  const ParamLayout& L = state.layout();
  Json blocks = Json::object();
  for (const auto& b : L.blocks()) {
    blocks[b.name] = {
        {"loc", encode_doubles(state.loc.data() + b.offset, b.size)},
        {"raw_scale",
         encode_doubles(state.raw_scale.data() + b.offset, b.size)}};
  }
  const AdamConfig& ac = state.opt.config();
  Json steps = Json::array();
  Json values = Json::array();
  Eigen::VectorXd trace_vals(static_cast<long>(state.elbo_trace.size()));
  for (std::size_t i = 0; i < state.elbo_trace.size(); ++i) {
    steps.push_back(state.elbo_trace[i].first);
    trace_vals[static_cast<long>(i)] = state.elbo_trace[i].second;
  }
  return Json{
      {"format", "spenc-checkpoint"},
      {"version", 1},
      {"items", L.items()},
      {"factors", L.factors()},
      {"step", state.step},
      {"blocks", blocks},
      {"optimizer",
       {{"t", state.opt.steps()},
        {"m", encode_doubles(state.opt.first_moment())},
        {"v", encode_doubles(state.opt.second_moment())},
        {"slow", encode_doubles(state.opt.slow_weights())},
        {"learning_rate", ac.learning_rate},
        {"beta1", ac.beta1},
        {"beta2", ac.beta2},
        {"eps", ac.eps},
        {"lookahead_k", ac.lookahead_k},
        {"lookahead_alpha", ac.lookahead_alpha}}},
      {"elbo_trace", {{"steps", steps}, {"values", encode_doubles(trace_vals)}}}};
}

inline VariationalState checkpoint_from_json(const Json& j) {
  if (j.at("format") != "spenc-checkpoint") {
    throw FormatError("not a spenc checkpoint document");
  }
  const long items = j.at("items").get<long>();
  const long factors = j.at("factors").get<long>();
  ParamLayout layout(items, factors);
  const Json& opt = j.at("optimizer");
  TrainConfig cfg;
  cfg.learning_rate = opt.at("learning_rate").get<double>();
  cfg.adam_beta1 = opt.at("beta1").get<double>();
  cfg.adam_beta2 = opt.at("beta2").get<double>();
  cfg.adam_eps = opt.at("eps").get<double>();
  cfg.lookahead_k = opt.at("lookahead_k").get<long>();
  cfg.lookahead_alpha = opt.at("lookahead_alpha").get<double>();
  VariationalState state(layout, cfg);
  const Json& blocks = j.at("blocks");
  for (const auto& b : layout.blocks()) {
    const Json& blk = blocks.at(b.name);
    const Eigen::VectorXd loc =
        decode_doubles(blk.at("loc").get<std::string>());
    const Eigen::VectorXd rs =
        decode_doubles(blk.at("raw_scale").get<std::string>());
    if (loc.size() != b.size || rs.size() != b.size) {
      throw FormatError("block '" + b.name + "' has unexpected size");
    }
    state.loc.segment(b.offset, b.size) = loc;
    state.raw_scale.segment(b.offset, b.size) = rs;
  }
  state.step = j.at("step").get<long>();
  state.opt.restore(opt.at("t").get<long>(),
                    decode_doubles(opt.at("m").get<std::string>()),
                    decode_doubles(opt.at("v").get<std::string>()),
                    decode_doubles(opt.at("slow").get<std::string>()));
  const Json& trace = j.at("elbo_trace");
  const Eigen::VectorXd values =
      decode_doubles(trace.at("values").get<std::string>());
  const Json& steps = trace.at("steps");
  for (long i = 0; i < values.size(); ++i) {
    state.elbo_trace.emplace_back(steps[static_cast<std::size_t>(i)]
                                      .get<long>(),
                                  values[i]);
  }
  return state;
}

// ---- FitResult document ----

inline Json fit_to_json(const FitResult& fit) {
  const TrainConfig& t = fit.train_config;
  return Json{
      {"format", "spenc-fit"},
      {"version", 1},
      {"model",
       {{"factors", fit.model_config.factors},
        {"link", link_name(fit.model_config.link)},
        {"xi_mode",
         fit.model_config.xi_mode == XiMode::unit ? "unit" : "overdispersed"}}},
      {"priors",
       {{"u_local_scale", fit.priors.u_local_scale},
        {"u_global_scale", fit.priors.u_global_scale},
        {"gate_local_scale", fit.priors.gate_local_scale},
        {"gate_global_scale", fit.priors.gate_global_scale},
        {"beta_scale", fit.priors.beta_scale},
        {"w_scale", fit.priors.w_scale}}},
      {"train",
       {{"learning_rate", t.learning_rate},
        {"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"mc_samples", t.mc_samples},
        {"lookahead_k", t.lookahead_k},
        {"lookahead_alpha", t.lookahead_alpha},
        {"adam_beta1", t.adam_beta1},
        {"adam_beta2", t.adam_beta2},
        {"adam_eps", t.adam_eps},
        {"theta_scale", t.theta_scale},
        {"seed", t.seed}}},
      {"data", {{"users", fit.n_users}, {"items", fit.items()}}},
      {"eta", json_vector(fit.eta.eta)},
      {"summaries",
       {{"alpha_mean", json_matrix(fit.alpha_mean)},
        {"alpha_sd", json_matrix(fit.alpha_sd)},
        {"beta_mean", json_matrix(fit.beta_mean)},
        {"beta_sd", json_matrix(fit.beta_sd)},
        {"phi_mean", json_vector(fit.phi_mean)},
        {"phi_sd", json_vector(fit.phi_sd)},
        {"gate_mean", json_vector(fit.gate_mean)}}},
      {"state", checkpoint_to_json(fit.state)},
      {"warnings", fit.warnings}};
}

inline FitResult fit_from_json(const Json& j) {
  if (j.at("format") != "spenc-fit") {
    throw FormatError("not a spenc fit document");
  }
  FitResult fit;
  const Json& model = j.at("model");
  fit.model_config.factors = model.at("factors").get<long>();
  fit.model_config.link = link_from_name(model.at("link").get<std::string>());
  fit.model_config.xi_mode = model.at("xi_mode").get<std::string>() == "unit"
                                 ? XiMode::unit
                                 : XiMode::overdispersed;
  const Json& priors = j.at("priors");
  fit.priors.u_local_scale = priors.at("u_local_scale").get<double>();
  fit.priors.u_global_scale = priors.at("u_global_scale").get<double>();
  fit.priors.gate_local_scale = priors.at("gate_local_scale").get<double>();
  fit.priors.gate_global_scale = priors.at("gate_global_scale").get<double>();
  fit.priors.beta_scale = priors.at("beta_scale").get<double>();
  fit.priors.w_scale = priors.at("w_scale").get<double>();
  fit.model_config.u_local_scale = fit.priors.u_local_scale;
  fit.model_config.u_global_scale = fit.priors.u_global_scale;
  fit.model_config.gate_local_scale = fit.priors.gate_local_scale;
  fit.model_config.gate_global_scale = fit.priors.gate_global_scale;
  fit.model_config.beta_scale = fit.priors.beta_scale;
  fit.model_config.w_scale = fit.priors.w_scale;
  const Json& train = j.at("train");
  fit.train_config.learning_rate = train.at("learning_rate").get<double>();
  fit.train_config.epochs = train.at("epochs").get<long>();
  fit.train_config.batch_size = train.at("batch_size").get<long>();
  fit.train_config.mc_samples = train.at("mc_samples").get<long>();
  fit.train_config.lookahead_k = train.at("lookahead_k").get<long>();
  fit.train_config.lookahead_alpha =
      train.at("lookahead_alpha").get<double>();
  fit.train_config.adam_beta1 = train.at("adam_beta1").get<double>();
  fit.train_config.adam_beta2 = train.at("adam_beta2").get<double>();
  fit.train_config.adam_eps = train.at("adam_eps").get<double>();
  fit.train_config.theta_scale = train.at("theta_scale").get<double>();
  fit.train_config.seed = train.at("seed").get<std::uint64_t>();
  fit.n_users = j.at("data").at("users").get<long>();
  fit.eta.eta = vector_from_json(j.at("eta"));
  const Json& sm = j.at("summaries");
  fit.alpha_mean = matrix_from_json(sm.at("alpha_mean"));
  fit.alpha_sd = matrix_from_json(sm.at("alpha_sd"));
  fit.beta_mean = matrix_from_json(sm.at("beta_mean"));
  fit.beta_sd = matrix_from_json(sm.at("beta_sd"));
  fit.phi_mean = vector_from_json(sm.at("phi_mean"));
  fit.phi_sd = vector_from_json(sm.at("phi_sd"));
  fit.gate_mean = vector_from_json(sm.at("gate_mean"));
  fit.state = checkpoint_from_json(j.at("state"));
  if (j.contains("warnings")) {
    for (const auto& w : j.at("warnings")) {
      fit.warnings.push_back(w.get<std::string>());
    }
  }
  return fit;
}

// ---- evaluation artifacts ----

inline Json waic_to_json(const WaicReport& r) {
  return Json{{"waic", round9(r.waic)},   {"se", round9(r.se)},
              {"lppd", round9(r.lppd)},   {"p_waic", round9(r.p_waic)},
              {"unit", waic_unit_name(r.unit)}, {"n_points", r.n_points},
              {"draws", r.draws}};
}

inline Json partition_to_json(const FeaturePartition& p) {
  return Json{{"gate_threshold", round9(p.threshold)},
              {"factor_items", p.factor_items},
              {"background_items", p.background_items},
              {"gate_means", json_vector(p.gate_means)}};
}

// Infinite interval ends serialize as the strings "inf" / "-inf".
inline Json json_bound(double x) {
  if (std::isinf(x)) return x > 0 ? Json("inf") : Json("-inf");
  return Json(round9(x));
}

inline Json rule_to_json(const CountRule& r) {
  return Json{{"factor", r.factor},
              {"interval", Json::array({json_bound(r.lower),
                                        json_bound(r.upper)})},
              {"xi", round9(r.xi)},
              {"scaled_interval", Json::array({json_bound(r.scaled_lower),
                                               json_bound(r.scaled_upper)})},
              {"support", r.support},
              {"coefficients", [&] {
                 Json a = Json::array();
                 for (double c : r.coefficients) a.push_back(round9(c));
                 return a;
               }()},
              {"link", link_name(r.link)},
              {"support_threshold", round9(r.support_threshold)},
              {"empty_support", r.empty_support}};
}

inline Json stratification_to_json(const Stratification& s) {
  Json thresholds = Json::array();
  for (double t : s.thresholds) thresholds.push_back(round9(t));
  Json quantiles = Json::array();
  for (double q : s.quantiles) quantiles.push_back(round9(q));
  Json rules = Json::array();
  for (const auto& r : s.rules) rules.push_back(rule_to_json(r));
  return Json{{"factor", s.factor},
              {"quantiles", quantiles},
              {"thresholds", thresholds},
              {"strata", rules}};
}

inline Json truth_to_json(const SyntheticTruth& t) {
  return Json{{"format", "spenc-truth"},
              {"noise_rate", round9(t.noise_rate)},
              {"structured_items", t.structured_items},
              {"true_decoder", json_matrix_b64(t.true_decoder)},
              {"true_representations",
               json_matrix_b64(t.true_representations)}};
}

inline SyntheticTruth truth_from_json(const Json& j) {
  SyntheticTruth t;
  t.noise_rate = j.at("noise_rate").get<double>();
  for (const auto& i : j.at("structured_items")) {
    t.structured_items.push_back(i.get<long>());
  }
  t.true_decoder = matrix_from_json_b64(j.at("true_decoder"));
  t.true_representations =
      matrix_from_json_b64(j.at("true_representations"));
  return t;
}

inline void write_json(const Json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) throw FormatError(path + ": write failed");
}

inline Json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open file");
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return j;
}

}  // namespace spenc
