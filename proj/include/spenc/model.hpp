#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spenc/count_matrix.hpp"
#include "spenc/densities.hpp"
#include "spenc/errors.hpp"
#include "spenc/layout.hpp"
#include "spenc/link.hpp"
#include "spenc/scaling.hpp"
#include "spenc/transforms.hpp"

namespace spenc {

// Floor applied to Poisson rates before likelihood evaluation so a zero
// rate under positive counts stays finite.
constexpr double kRateFloor = 1e-10;

struct ModelConfig {
  long factors = 3;
  LinkKind link = LinkKind::identity_scaled;
  XiMode xi_mode = XiMode::unit;
  // NaN fields resolve from the data dimensions in Priors::resolve.
  // All scale parameters are standard deviations of half-normal or
  // half-Cauchy distributions.
  double u_local_scale = 1.0;
  double u_global_scale = std::numeric_limits<double>::quiet_NaN();
  double gate_local_scale = 1.0;
  double gate_global_scale = 1.0;
  double beta_scale = std::numeric_limits<double>::quiet_NaN();
  double w_scale = 10.0;
};

struct Priors {
  double u_local_scale;
  double u_global_scale;
  double gate_local_scale;
  double gate_global_scale;
  double beta_scale;
  double w_scale;

  static Priors resolve(const ModelConfig& cfg, long n_users, long n_items) {
    Priors p{cfg.u_local_scale, cfg.u_global_scale, cfg.gate_local_scale,
             cfg.gate_global_scale, cfg.beta_scale, cfg.w_scale};
    if (std::isnan(p.u_global_scale)) {
      p.u_global_scale = 1.0 / std::sqrt(static_cast<double>(n_users) *
                                         static_cast<double>(n_items));
    }
    if (std::isnan(p.beta_scale)) {
      p.beta_scale = 1.0 / (2.0 * static_cast<double>(cfg.factors));
    }
    return p;
  }
};

// One constrained realization of every latent parameter, flat per
// ParamLayout, with the transform log-Jacobian carried along.
struct ParamDraw {
  ParamLayout layout;
  Eigen::VectorXd values;
  double log_jacobian = 0.0;

  static ParamDraw from_unconstrained(const Eigen::VectorXd& z,
                                      const ParamLayout& layout) {
    auto c = constrain(z, layout);
    return {layout, std::move(c.values), c.log_jacobian};
  }

  static ParamDraw from_constrained(Eigen::VectorXd vals,
                                    const ParamLayout& layout) {
    return {layout, std::move(vals), 0.0};
  }

  using ConstMat = Eigen::Map<const Eigen::MatrixXd>;
  using ConstVec = Eigen::Map<const Eigen::VectorXd>;

  ConstMat u() const {
    return {values.data() + layout.u, layout.items(), layout.factors()};
  }
  ConstVec s_plus() const {
    return {values.data() + layout.s_plus, layout.items()};
  }
  ConstVec s_minus() const {
    return {values.data() + layout.s_minus, layout.items()};
  }
  ConstVec w() const { return {values.data() + layout.w, layout.items()}; }
  ConstMat beta() const {
    return {values.data() + layout.beta, layout.factors(), layout.items()};
  }
  ConstMat u_lambda2() const {
    return {values.data() + layout.u_hs_lambda2, layout.items(),
            layout.factors()};
  }
  ConstMat u_lambda_aux() const {
    return {values.data() + layout.u_hs_lambda_aux, layout.items(),
            layout.factors()};
  }
  ConstVec u_tau2() const {
    return {values.data() + layout.u_hs_tau2, layout.factors()};
  }
  ConstVec u_tau_aux() const {
    return {values.data() + layout.u_hs_tau_aux, layout.factors()};
  }
  ConstVec s_lambda2() const {
    return {values.data() + layout.s_hs_lambda2, 2 * layout.items()};
  }
  ConstVec s_lambda_aux() const {
    return {values.data() + layout.s_hs_lambda_aux, 2 * layout.items()};
  }
  ConstVec s_tau2() const {
    return {values.data() + layout.s_hs_tau2, layout.items()};
  }
  ConstVec s_tau_aux() const {
    return {values.data() + layout.s_hs_tau_aux, layout.items()};
  }

  // gate_i = s+_i / (s+_i + s-_i); the complementary fractions route each
  // item between the factor map and the background rate.
  Eigen::VectorXd gate() const {
    return (s_plus().array() / (s_plus().array() + s_minus().array()))
        .matrix();
  }

  // alpha_ik = u_ik * gate_i
  Eigen::MatrixXd alpha() const {
    Eigen::MatrixXd a = u();
    a.array().colwise() *= gate().array();
    return a;
  }

  // phi_i = eta_i * w_i * (1 - gate_i)
  Eigen::VectorXd phi(const Eigen::VectorXd& eta) const {
    return (eta.array() * w().array() * (1.0 - gate().array())).matrix();
  }
};

// Scale variables of one horseshoe group: squared locals with their
// auxiliaries and the squared global with its auxiliary.
struct HorseshoeScales {
  Eigen::VectorXd lambda2;
  Eigen::VectorXd lambda_aux;
  double tau2 = 1.0;
  double tau_aux = 1.0;
};

// theta_bk = xi_b * sum_i g_i(y_bi) alpha_ik, summed in ascending column
// order over the stored (nonzero) entries only; g_i(0) = 0 makes that exact.
inline Eigen::MatrixXd encode(const CountMatrix& Y,
                              std::span<const long> rows,
                              const Eigen::MatrixXd& alpha,
                              const Eigen::VectorXd& xi_rows,
                              const LinkPair& link) {
  if (alpha.rows() != Y.cols()) {
    throw ValidationError("alpha has " + std::to_string(alpha.rows()) +
                          " rows, expected " + std::to_string(Y.cols()));
  }
  if (xi_rows.size() != static_cast<long>(rows.size())) {
    throw ValidationError("xi slice size does not match batch rows");
  }
  const long K = alpha.cols();
  Eigen::MatrixXd theta =
      Eigen::MatrixXd::Zero(static_cast<long>(rows.size()), K);
  for (long b = 0; b < static_cast<long>(rows.size()); ++b) {
    const auto& items = Y.row(rows[static_cast<std::size_t>(b)]);
    for (long k = 0; k < K; ++k) {
      double acc = 0.0;
      for (const auto& item : items) {
        acc += link.g(item.col, static_cast<double>(item.count)) *
               alpha(item.col, k);
      }
      theta(b, k) = xi_rows[b] * acc;
    }
  }
  return theta;
}

inline Eigen::MatrixXd encode_all(const CountMatrix& Y,
                                  const Eigen::MatrixXd& alpha,
                                  const Eigen::VectorXd& xi,
                                  const LinkPair& link) {
  std::vector<long> rows(static_cast<std::size_t>(Y.rows()));
  for (long r = 0; r < Y.rows(); ++r) rows[static_cast<std::size_t>(r)] = r;
  return encode(Y, rows, alpha, xi, link);
}

// lambda_bi = f_i(sum_k theta_bk beta_ki) + phi_i, floored at kRateFloor.
inline Eigen::MatrixXd decode_rate(const Eigen::MatrixXd& theta,
                                   const ParamDraw& draw,
                                   const LinkPair& link) {
  if (theta.cols() != draw.layout.factors()) {
    throw ValidationError("theta factor dimension mismatch");
  }
  const Eigen::VectorXd phi = draw.phi(link.eta);
  Eigen::MatrixXd m = theta * draw.beta();
  for (long i = 0; i < m.cols(); ++i) {
    for (long b = 0; b < m.rows(); ++b) {
      m(b, i) = std::max(link.f(i, m(b, i)) + phi[i], kRateFloor);
    }
  }
  return m;
}

// Dense double copy of a row batch.
inline Eigen::MatrixXd dense_counts(const CountMatrix& Y,
                                    std::span<const long> rows) {
  Eigen::MatrixXd out =
      Eigen::MatrixXd::Zero(static_cast<long>(rows.size()), Y.cols());
  for (long b = 0; b < static_cast<long>(rows.size()); ++b) {
    for (const auto& item : Y.row(rows[static_cast<std::size_t>(b)])) {
      out(b, item.col) = static_cast<double>(item.count);
    }
  }
  return out;
}

struct LoglikResult {
  Eigen::MatrixXd per_entry;
  double sum = 0.0;
};

// y log(rate) - rate - log(y!) per entry; rates must be positive
// (decode_rate's floor guarantees that).
inline LoglikResult poisson_loglik(const Eigen::MatrixXd& counts,
                                   const Eigen::MatrixXd& rates) {
  if (counts.rows() != rates.rows() || counts.cols() != rates.cols()) {
    throw ValidationError("counts/rates dimension mismatch");
  }
  LoglikResult out;
  out.per_entry.resizeLike(counts);
  for (long i = 0; i < counts.cols(); ++i) {
    for (long b = 0; b < counts.rows(); ++b) {
      const double ll =
          poisson_logpmf(static_cast<long>(counts(b, i)), rates(b, i));
      out.per_entry(b, i) = ll;
      out.sum += ll;
    }
  }
  return out;
}

// Unit half-normal regularizer on the representation.
inline double theta_prior_logdensity(const Eigen::MatrixXd& theta) {
  double acc = 0.0;
  for (long k = 0; k < theta.cols(); ++k) {
    for (long b = 0; b < theta.rows(); ++b) {
      acc += kLog2 - kHalfLog2Pi - 0.5 * theta(b, k) * theta(b, k);
    }
  }
  return acc;
}

// Non-negative horseshoe: half-normal components with sd lambda_j * tau,
// where the half-Cauchy scales are expressed through paired inverse-Gamma
// auxiliaries: lambda_j^2 ~ IG(1/2, 1/aux_j), aux_j ~ IG(1/2, 1/lambda0^2),
// and likewise for tau^2 with hyperparameter tau0.
inline double horseshoe_log_prior(const Eigen::VectorXd& x,
                                  const HorseshoeScales& s, double lambda0,
                                  double tau0) {
  if (s.tau2 <= 0.0 || s.tau_aux <= 0.0 || (s.lambda2.array() <= 0.0).any() ||
      (s.lambda_aux.array() <= 0.0).any()) {
    throw std::domain_error("horseshoe scale auxiliaries must be positive");
  }
  double acc = 0.0;
  const double tau = std::sqrt(s.tau2);
  for (long j = 0; j < x.size(); ++j) {
    acc += half_normal_logpdf(x[j], std::sqrt(s.lambda2[j]) * tau);
    acc += inv_gamma_logpdf(s.lambda2[j], 0.5, 1.0 / s.lambda_aux[j]);
    acc += inv_gamma_logpdf(s.lambda_aux[j], 0.5, 1.0 / (lambda0 * lambda0));
  }
  acc += inv_gamma_logpdf(s.tau2, 0.5, 1.0 / s.tau_aux);
  acc += inv_gamma_logpdf(s.tau_aux, 0.5, 1.0 / (tau0 * tau0));
  return acc;
}

inline HorseshoeScales u_group_scales(const ParamDraw& d, long k) {
  return {d.u_lambda2().col(k), d.u_lambda_aux().col(k), d.u_tau2()[k],
          d.u_tau_aux()[k]};
}

inline HorseshoeScales s_group_scales(const ParamDraw& d, long i) {
  const long I = d.layout.items();
  Eigen::VectorXd l2(2), la(2);
  l2 << d.s_lambda2()[i], d.s_lambda2()[I + i];
  la << d.s_lambda_aux()[i], d.s_lambda_aux()[I + i];
  return {l2, la, d.s_tau2()[i], d.s_tau_aux()[i]};
}

// All parameter-space prior terms (everything except the likelihood and the
// representation regularizer, which scale with the batch).
inline double global_prior_logdensity(const ParamDraw& d, const Priors& p) {
  double acc = 0.0;
  for (long k = 0; k < d.layout.factors(); ++k) {
    acc += horseshoe_log_prior(d.u().col(k), u_group_scales(d, k),
                               p.u_local_scale, p.u_global_scale);
  }
  for (long i = 0; i < d.layout.items(); ++i) {
    Eigen::VectorXd pair(2);
    pair << d.s_plus()[i], d.s_minus()[i];
    acc += horseshoe_log_prior(pair, s_group_scales(d, i), p.gate_local_scale,
                               p.gate_global_scale);
  }
  for (long i = 0; i < d.layout.items(); ++i) {
    for (long k = 0; k < d.layout.factors(); ++k) {
      acc += half_normal_logpdf(d.beta()(k, i), p.beta_scale);
    }
  }
  for (long i = 0; i < d.layout.items(); ++i) {
    acc += half_normal_logpdf(d.w()[i], p.w_scale);
  }
  return acc;
}

// batch_scale * (Poisson log-likelihood + representation prior) plus the
// unscaled parameter priors. batch_scale must be U / |batch|.
inline double log_joint(const ParamDraw& draw, const CountMatrix& Y,
                        std::span<const long> rows,
                        const Eigen::VectorXd& xi_rows, const LinkPair& link,
                        double batch_scale, const Priors& priors) {
  const Eigen::MatrixXd theta =
      encode(Y, rows, draw.alpha(), xi_rows, link);
  const Eigen::MatrixXd rates = decode_rate(theta, draw, link);
  const Eigen::MatrixXd counts = dense_counts(Y, rows);
  const double lik = poisson_loglik(counts, rates).sum;
  const double theta_prior = theta_prior_logdensity(theta);
  return batch_scale * (lik + theta_prior) +
         global_prior_logdensity(draw, priors);
}

}  // namespace spenc
