#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "spenc/fit.hpp"
#include "spenc/model.hpp"
#include "spenc/parallel.hpp"

namespace spenc {

enum class WaicUnit { entry, user_row };

inline std::string waic_unit_name(WaicUnit u) {
  return u == WaicUnit::entry ? "entry" : "user-row";
}

inline WaicUnit waic_unit_from_name(const std::string& name) {
  if (name == "entry") return WaicUnit::entry;
  if (name == "user-row" || name == "row") return WaicUnit::user_row;
  throw ConfigError("unknown WAIC unit '" + name + "'");
}

struct WaicReport {
  double waic = 0.0;
  double se = 0.0;
  double lppd = 0.0;
  double p_waic = 0.0;
  WaicUnit unit = WaicUnit::entry;
  long n_points = 0;
  long draws = 0;
};

namespace detail {

// Streaming per-point accumulators: log-sum-exp for lppd and Welford
// moments for the posterior variance of log p.
struct PointAccum {
  double lse_max = -std::numeric_limits<double>::infinity();
  double lse_acc = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  long count = 0;

  void add(double logp) {
    if (logp > lse_max) {
      lse_acc = lse_acc * std::exp(lse_max - logp) + 1.0;
      lse_max = logp;
    } else {
      lse_acc += std::exp(logp - lse_max);
    }
    ++count;
    const double delta = logp - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (logp - mean);
  }

  double lppd() const {
    return lse_max + std::log(lse_acc) - std::log(static_cast<double>(count));
  }
  double var() const { return m2 / static_cast<double>(count - 1); }
};

}  // namespace detail

// waic = -2 (lppd - p_waic) with lppd = sum_p log mean_s p(y_p | draw_s) and
// p_waic = sum_p var_s log p. The standard error is sqrt(n) times the
// sample standard deviation of the pointwise -2(lppd_p - p_p) values.
inline WaicReport waic(const FitResult& fit, const CountMatrix& Y, long draws,
                       WaicUnit unit) {
  if (draws < 2) {
    throw ValidationError("WAIC needs at least 2 draws (variance undefined)");
  }
  if (Y.cols() != fit.items()) {
    throw ValidationError("data has " + std::to_string(Y.cols()) +
                          " columns, fitted model expects " +
                          std::to_string(fit.items()));
  }
  const long U = Y.rows();
  const long I = Y.cols();
  const long n_points = unit == WaicUnit::entry ? U * I : U;
  std::vector<detail::PointAccum> points(
      static_cast<std::size_t>(n_points));

  const LinkPair link = fit.link();
  const UserScales xi = compute_user_scales(Y, fit.model_config.xi_mode);
  std::vector<long> all_rows(static_cast<std::size_t>(U));
  std::iota(all_rows.begin(), all_rows.end(), 0L);

  for (long s = 0; s < draws; ++s) {
    const ParamDraw draw = fit.sample_draw(s);
    const Eigen::MatrixXd alpha = draw.alpha();
    for_blocks(U, 2048, [&](long, long begin, long end) {
      const std::span<const long> rows(all_rows.data() + begin,
                                       static_cast<std::size_t>(end - begin));
      const Eigen::VectorXd xi_rows =
          xi.xi.segment(begin, end - begin);
      const Eigen::MatrixXd theta = encode(Y, rows, alpha, xi_rows, link);
      const Eigen::MatrixXd rates = decode_rate(theta, draw, link);
      const Eigen::MatrixXd counts = dense_counts(Y, rows);
      for (long b = 0; b < rates.rows(); ++b) {
        double row_logp = 0.0;
        for (long i = 0; i < I; ++i) {
          const double lp =
              poisson_logpmf(static_cast<long>(counts(b, i)), rates(b, i));
          if (unit == WaicUnit::entry) {
            points[static_cast<std::size_t>((begin + b) * I + i)].add(lp);
          } else {
            row_logp += lp;
          }
        }
        if (unit == WaicUnit::user_row) {
          points[static_cast<std::size_t>(begin + b)].add(row_logp);
        }
      }
    });
  }

  WaicReport report;
  report.unit = unit;
  report.n_points = n_points;
  report.draws = draws;
  double waic_sum = 0.0, waic_sumsq = 0.0;
  for (const auto& p : points) {
    const double lppd_p = p.lppd();
    const double var_p = p.var();
    report.lppd += lppd_p;
    report.p_waic += var_p;
    const double w = -2.0 * (lppd_p - var_p);
    waic_sum += w;
    waic_sumsq += w * w;
  }
  report.waic = -2.0 * (report.lppd - report.p_waic);
  const double n = static_cast<double>(n_points);
  const double var =
      (waic_sumsq - waic_sum * waic_sum / n) / (n - 1.0);
  report.se = std::sqrt(n * std::max(var, 0.0));
  return report;
}

struct FeaturePartition {
  std::vector<long> factor_items;
  std::vector<long> background_items;
  Eigen::VectorXd gate_means;
  double threshold = 0.5;
};

// Items whose posterior mean gate exceeds the threshold route into the
// factor model; the rest belong to the background process.
inline FeaturePartition feature_partition(const FitResult& fit,
                                          double gate_threshold = 0.5) {
  FeaturePartition part;
  part.gate_means = fit.gate_mean;
  part.threshold = gate_threshold;
  for (long i = 0; i < fit.items(); ++i) {
    if (fit.gate_mean[i] > gate_threshold) {
      part.factor_items.push_back(i);
    } else {
      part.background_items.push_back(i);
    }
  }
  return part;
}

// A decision rule on raw counts equivalent to thresholding one coordinate
// of the representation: theta_uk in (lower, upper] iff the weighted count
// sum over the support lies in the xi-scaled interval. Membership is
// evaluated as lower < xi * sum <= upper, which reproduces the encoder
// arithmetic bit-for-bit when the support carries every nonzero
// coefficient.
struct CountRule {
  long factor = 0;
  double lower = 0.0;
  double upper = 0.0;
  double xi = 1.0;
  double scaled_lower = 0.0;
  double scaled_upper = 0.0;
  std::vector<long> support;           // ascending item indices
  std::vector<double> coefficients;    // mean alpha_jk over the support
  LinkKind link = LinkKind::identity_scaled;
  Eigen::VectorXd eta;
  double support_threshold = 0.0;
  bool empty_support = false;

  // sum_{j in support} g_j(y_uj) alpha_jk, ascending j over stored entries.
  double weighted_sum(const CountMatrix& Y, long row) const {
    const LinkPair lp{link, eta};
    const auto& items = Y.row(row);
    double acc = 0.0;
    std::size_t si = 0;
    for (const auto& item : items) {
      while (si < support.size() && support[si] < item.col) ++si;
      if (si == support.size()) break;
      if (support[si] == item.col) {
        acc += lp.g(item.col, static_cast<double>(item.count)) *
               coefficients[si];
      }
    }
    return acc;
  }

  bool contains(const CountMatrix& Y, long row, double xi_u) const {
    const double theta_hat = xi_u * weighted_sum(Y, row);
    return lower < theta_hat && theta_hat <= upper;
  }
};

// Invert a representation-space interval into a count-space rule. The
// support keeps items with mean alpha_jk >= support_threshold * max_j
// alpha_jk (all strictly positive entries when the threshold is zero).
inline CountRule invert_rule(const FitResult& fit, long k, double lower,
                             double upper, double xi_u,
                             double support_threshold = 0.01) {
  if (!(lower < upper)) throw ValidationError("rule interval needs a < b");
  if (!(xi_u > 0.0)) throw ValidationError("xi must be positive");
  if (k < 0 || k >= fit.factors()) {
    throw ValidationError("factor index out of range");
  }
  CountRule rule;
  rule.factor = k;
  rule.lower = lower;
  rule.upper = upper;
  rule.xi = xi_u;
  rule.scaled_lower = lower / xi_u;
  rule.scaled_upper = upper / xi_u;
  rule.link = fit.model_config.link;
  rule.eta = fit.eta.eta;
  rule.support_threshold = support_threshold;
  const Eigen::VectorXd col = fit.alpha_mean.col(k);
  const double cutoff = support_threshold * col.maxCoeff();
  for (long j = 0; j < col.size(); ++j) {
    if (col[j] > 0.0 && col[j] >= cutoff) {
      rule.support.push_back(j);
      rule.coefficients.push_back(col[j]);
    }
  }
  rule.empty_support = rule.support.empty();
  return rule;
}

struct Stratification {
  long factor = 0;
  std::vector<double> quantiles;
  std::vector<double> thresholds;
  std::vector<CountRule> rules;  // stratum j covers (t_j, t_{j+1}]
};

// Linear interpolation of order statistics (inclusive endpoints).
inline double quantile_linear(std::vector<double> sorted, double p) {
  const long n = static_cast<long>(sorted.size());
  const double h = p * static_cast<double>(n - 1);
  const long lo = static_cast<long>(std::floor(h));
  const long hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[static_cast<std::size_t>(lo)] +
         frac * (sorted[static_cast<std::size_t>(hi)] -
                 sorted[static_cast<std::size_t>(lo)]);
}

// Stratum index = number of thresholds strictly below theta, so stratum j
// is the interval (t_j, t_{j+1}] with t_0 = -inf and t_{m+1} = +inf.
inline long stratum_of(const std::vector<double>& thresholds, double theta) {
  long s = 0;
  for (const double t : thresholds) {
    if (t < theta) ++s;
  }
  return s;
}

inline Stratification stratify(const FitResult& fit,
                               const Eigen::MatrixXd& theta, long k,
                               const std::vector<double>& quantiles,
                               double xi_u = 1.0,
                               double support_threshold = 0.0) {
  if (quantiles.empty()) throw ValidationError("need at least one quantile");
  for (std::size_t q = 0; q < quantiles.size(); ++q) {
    if (quantiles[q] <= 0.0 || quantiles[q] >= 1.0 ||
        (q > 0 && quantiles[q] <= quantiles[q - 1])) {
      throw ValidationError(
          "quantiles must be strictly increasing inside (0, 1)");
    }
  }
  if (k < 0 || k >= theta.cols()) {
    throw ValidationError("factor index out of range");
  }
  std::vector<double> col(theta.rows());
  for (long b = 0; b < theta.rows(); ++b) col[static_cast<std::size_t>(b)] =
      theta(b, k);
  std::vector<double> sorted = col;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    throw ValidationError("degenerate strata: constant representation column");
  }
  Stratification out;
  out.factor = k;
  out.quantiles = quantiles;
  for (const double p : quantiles) {
    out.thresholds.push_back(quantile_linear(sorted, p));
  }
  for (std::size_t t = 1; t < out.thresholds.size(); ++t) {
    if (!(out.thresholds[t] > out.thresholds[t - 1])) {
      throw ValidationError("degenerate strata: tied quantile thresholds");
    }
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> bounds;
  bounds.push_back(-inf);
  bounds.insert(bounds.end(), out.thresholds.begin(), out.thresholds.end());
  bounds.push_back(inf);
  for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
    out.rules.push_back(invert_rule(fit, k, bounds[j], bounds[j + 1], xi_u,
                                    support_threshold));
  }
  return out;
}

}  // namespace spenc
