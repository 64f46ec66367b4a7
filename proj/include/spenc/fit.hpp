#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "spenc/elbo.hpp"
#include "spenc/model.hpp"
#include "spenc/scaling.hpp"
#include "spenc/variational.hpp"

namespace spenc {

constexpr long kSummaryDraws = 200;

// Posterior summaries plus the final variational state; the state together
// with the training seed acts as the draw generator.
struct FitResult {
  ModelConfig model_config;
  TrainConfig train_config;
  long n_users = 0;
  ItemMeans eta;
  Eigen::MatrixXd alpha_mean, alpha_sd;  // I x K
  Eigen::MatrixXd beta_mean, beta_sd;    // K x I
  Eigen::VectorXd phi_mean, phi_sd;      // I
  Eigen::VectorXd gate_mean;             // I
  VariationalState state;
  Priors priors;
  std::vector<std::string> warnings;

  long items() const { return state.layout().items(); }
  long factors() const { return state.layout().factors(); }

  LinkPair link() const { return {model_config.link, eta.eta}; }

  // Draw `index` from the fitted posterior; reproducible for a given index.
  ParamDraw sample_draw(long index) const {
    const ParamLayout& L = state.layout();
    CounterRng rng(train_config.seed, streams::posterior(index));
    Eigen::VectorXd z(L.dim());
    const Eigen::VectorXd s = state.scales();
    for (long j = 0; j < L.dim(); ++j) {
      z[j] = state.loc[j] + s[j] * rng.normal();
    }
    return ParamDraw::from_unconstrained(z, L);
  }

  std::vector<ParamDraw> sample_draws(long count) const {
    std::vector<ParamDraw> draws;
    draws.reserve(static_cast<std::size_t>(count));
    for (long d = 0; d < count; ++d) draws.push_back(sample_draw(d));
    return draws;
  }
};

namespace detail {

// Least-squares slope of the trailing `window` trace values with its
// standard error; used for the non-convergence warning.
inline bool trailing_slope_positive(
    const std::vector<std::pair<long, double>>& trace, long window,
    double* slope_out, double* se_out) {
  const long n = static_cast<long>(trace.size());
  const long w = std::min(window, n);
  if (w < 3) return false;
  double sx = 0, sy = 0;
  for (long j = n - w; j < n; ++j) {
    sx += static_cast<double>(j);
    sy += trace[static_cast<std::size_t>(j)].second;
  }
  const double mx = sx / w, my = sy / w;
  double sxx = 0, sxy = 0;
  for (long j = n - w; j < n; ++j) {
    const double dx = static_cast<double>(j) - mx;
    sxx += dx * dx;
    sxy += dx * (trace[static_cast<std::size_t>(j)].second - my);
  }
  if (sxx <= 0) return false;
  const double slope = sxy / sxx;
  double rss = 0;
  for (long j = n - w; j < n; ++j) {
    const double fitted =
        my + slope * (static_cast<double>(j) - mx);
    const double e = trace[static_cast<std::size_t>(j)].second - fitted;
    rss += e * e;
  }
  const double se = std::sqrt(rss / static_cast<double>(w - 2) / sxx);
  *slope_out = slope;
  *se_out = se;
  return slope > 2.0 * se;
}

struct RunningMoments {
  explicit RunningMoments(long n) : sum(Eigen::VectorXd::Zero(n)),
                                    sumsq(Eigen::VectorXd::Zero(n)) {}
  void add(const Eigen::VectorXd& x) {
    sum += x;
    sumsq.array() += x.array().square();
    ++count;
  }
  Eigen::VectorXd mean() const { return sum / static_cast<double>(count); }
  Eigen::VectorXd sd() const {
    const double n = static_cast<double>(count);
    Eigen::ArrayXd var =
        (sumsq.array() - sum.array().square() / n) / (n - 1.0);
    return var.max(0.0).sqrt().matrix();
  }
  Eigen::VectorXd sum, sumsq;
  long count = 0;
};

}  // namespace detail

// Fixed-budget minibatch training: epochs * ceil(U/batch) steps of
// elbo_estimate + adam_lookahead_step with batch_scale = U/|batch|, epoch-
// wise shuffled partitions and a deterministic noise stream per step.
inline FitResult fit(const CountMatrix& Y, const ModelConfig& mcfg,
                     const TrainConfig& tcfg) {
  tcfg.validate();
  const long U = Y.rows();
  const long I = Y.cols();
  const ItemMeans eta = compute_item_means(Y);
  const UserScales xi = compute_user_scales(Y, mcfg.xi_mode);

  VariationalState state =
      init_state(U, I, mcfg.factors, tcfg, tcfg.seed);
  ElboContext ctx{&Y, LinkPair{mcfg.link, eta.eta}, xi.xi,
                  Priors::resolve(mcfg, U, I), U, tcfg.theta_scale};

  std::vector<long> order(static_cast<std::size_t>(U));
  std::iota(order.begin(), order.end(), 0L);
  const long batch = std::min(tcfg.batch_size, U);
  for (long epoch = 0; epoch < tcfg.epochs; ++epoch) {
    CounterRng shuffle_rng(tcfg.seed, streams::shuffle(epoch));
    shuffle_rng.shuffle(order);
    for (long start = 0; start < U; start += batch) {
      const long len = std::min(batch, U - start);
      const std::span<const long> rows(order.data() + start,
                                       static_cast<std::size_t>(len));
      const ElboEstimate est = elbo_estimate(state, ctx, rows,
                                             tcfg.mc_samples, tcfg.seed,
                                             state.step);
      adam_lookahead_step(state, est);
    }
  }

  FitResult result;
  result.model_config = mcfg;
  result.train_config = tcfg;
  result.n_users = U;
  result.eta = eta;
  result.priors = ctx.priors;
  result.state = std::move(state);

  double slope = 0, se = 0;
  if (detail::trailing_slope_positive(result.state.elbo_trace, 100, &slope,
                                      &se)) {
    result.warnings.push_back(
        "elbo still rising over the trailing window (slope " +
        std::to_string(slope) + ", se " + std::to_string(se) +
        "); consider more epochs");
  }

  // Moment summaries over kSummaryDraws posterior draws.
  const long K = mcfg.factors;
  detail::RunningMoments alpha_m(I * K), beta_m(K * I), phi_m(I), gate_m(I);
  for (long d = 0; d < kSummaryDraws; ++d) {
    const ParamDraw draw = result.sample_draw(d);
    const Eigen::MatrixXd a = draw.alpha();
    alpha_m.add(Eigen::Map<const Eigen::VectorXd>(a.data(), a.size()));
    const Eigen::MatrixXd b = draw.beta();
    beta_m.add(Eigen::Map<const Eigen::VectorXd>(b.data(), b.size()));
    phi_m.add(draw.phi(eta.eta));
    gate_m.add(draw.gate());
  }
  auto as_matrix = [](const Eigen::VectorXd& v, long rows, long cols) {
    return Eigen::MatrixXd(
        Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols));
  };
  result.alpha_mean = as_matrix(alpha_m.mean(), I, K);
  result.alpha_sd = as_matrix(alpha_m.sd(), I, K);
  result.beta_mean = as_matrix(beta_m.mean(), K, I);
  result.beta_sd = as_matrix(beta_m.sd(), K, I);
  result.phi_mean = phi_m.mean();
  result.phi_sd = phi_m.sd();
  result.gate_mean = gate_m.mean();
  return result;
}

// Amortized representation of new rows: one pass through the fitted mean
// encoder, no refitting.
inline Eigen::MatrixXd transform_new(const FitResult& fit,
                                     const CountMatrix& Y_new, XiMode mode) {
  if (Y_new.cols() != fit.items()) {
    throw ValidationError("new data has " + std::to_string(Y_new.cols()) +
                          " columns, fitted model expects " +
                          std::to_string(fit.items()));
  }
  const UserScales xi = compute_user_scales(Y_new, mode);
  return encode_all(Y_new, fit.alpha_mean, xi.xi, fit.link());
}

}  // namespace spenc
