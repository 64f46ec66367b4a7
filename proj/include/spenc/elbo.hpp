#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>

#include "spenc/model.hpp"
#include "spenc/variational.hpp"

namespace spenc {

// Dense views of one minibatch. lgamma1p is lgamma(y+1), zero for absent
// entries; gmat holds g_i(y_bi), also zero at absent entries.
struct BatchData {
  Eigen::MatrixXd counts;
  Eigen::MatrixXd gmat;
  Eigen::MatrixXd lgamma1p;
  Eigen::VectorXd xi;
  double scale = 1.0;
};

inline BatchData make_batch(const CountMatrix& Y, std::span<const long> rows,
                            const Eigen::VectorXd& xi_full,
                            const LinkPair& link, double scale) {
  const long n = static_cast<long>(rows.size());
  const long I = Y.cols();
  BatchData bd{Eigen::MatrixXd::Zero(n, I), Eigen::MatrixXd::Zero(n, I),
               Eigen::MatrixXd::Zero(n, I), Eigen::VectorXd(n), scale};
  for (long b = 0; b < n; ++b) {
    const long r = rows[static_cast<std::size_t>(b)];
    bd.xi[b] = xi_full[r];
    for (const auto& item : Y.row(r)) {
      const double y = static_cast<double>(item.count);
      bd.counts(b, item.col) = y;
      bd.gmat(b, item.col) = link.g(item.col, y);
      bd.lgamma1p(b, item.col) = std::lgamma(y + 1.0);
    }
  }
  return bd;
}

struct JointGrad {
  double value = 0.0;  // log joint + transform log-Jacobian
  Eigen::VectorXd grad;
};

// Fused forward/backward evaluation of the transformed log joint over one
// minibatch. The returned gradient is with respect to the unconstrained
// vector z and includes the Jacobian term, so pathwise ELBO gradients follow
// by the chain rule through z = loc + scale * eps.
//
// When theta_eps is given, the representation is treated as a latent with
// an amortized fixed-width posterior N(theta_hat, theta_sigma): the
// likelihood and the representation prior are evaluated at
// theta_hat + theta_sigma * eps (the posterior entropy is a constant that
// lives in the caller).
inline JointGrad log_joint_grad(const Eigen::VectorXd& z,
                                const ParamLayout& L, const BatchData& bd,
                                const LinkPair& link, const Priors& pri,
                                const Eigen::MatrixXd* theta_eps = nullptr,
                                double theta_sigma = 0.0) {
  const long I = L.items();
  const long K = L.factors();
  const long n = bd.counts.rows();
  const long D = L.dim();
  const long sp_end = L.u_hs_lambda2;  // softplus prefix / exp suffix split

  Eigen::VectorXd val(D);
  Eigen::VectorXd sig(sp_end);
  double jac = 0.0;
  for (long j = 0; j < sp_end; ++j) {
    val[j] = softplus(z[j]);
    sig[j] = sigmoid(z[j]);
    jac += log_sigmoid(z[j]);
  }
  for (long j = sp_end; j < D; ++j) {
    val[j] = std::exp(z[j]);
    jac += z[j];
  }

  using CMat = Eigen::Map<const Eigen::MatrixXd>;
  using CVec = Eigen::Map<const Eigen::VectorXd>;
  const CMat u(val.data() + L.u, I, K);
  const CVec sp(val.data() + L.s_plus, I);
  const CVec sm(val.data() + L.s_minus, I);
  const CVec w(val.data() + L.w, I);
  const CMat B(val.data() + L.beta, K, I);
  const CMat uL2(val.data() + L.u_hs_lambda2, I, K);
  const CMat uLa(val.data() + L.u_hs_lambda_aux, I, K);
  const CVec uT2(val.data() + L.u_hs_tau2, K);
  const CVec uTa(val.data() + L.u_hs_tau_aux, K);
  const CVec sL2(val.data() + L.s_hs_lambda2, 2 * I);
  const CVec sLa(val.data() + L.s_hs_lambda_aux, 2 * I);
  const CVec sT2(val.data() + L.s_hs_tau2, I);
  const CVec sTa(val.data() + L.s_hs_tau_aux, I);

  const Eigen::ArrayXd r = sp.array() + sm.array();
  const Eigen::ArrayXd gate = sp.array() / r;
  const Eigen::ArrayXd omg = sm.array() / r;
  const Eigen::ArrayXd phi = link.eta.array() * w.array() * omg;

  Eigen::MatrixXd alpha = u;
  alpha.array().colwise() *= gate;
  Eigen::MatrixXd theta = bd.gmat * alpha;
  theta.array().colwise() *= bd.xi.array();
  if (theta_eps) theta += theta_sigma * (*theta_eps);
  Eigen::MatrixXd M = theta * B;  // becomes dM in the likelihood loop

  const bool log_link = link.kind == LinkKind::log_link;
  double loglik = 0.0;
  Eigen::VectorXd dphi = Eigen::VectorXd::Zero(I);
  for (long i = 0; i < I; ++i) {
    const double eta_i = link.eta[i];
    for (long b = 0; b < n; ++b) {
      const double m = M(b, i);
      double fval, fprime;
      if (log_link) {
        fval = std::expm1(eta_i * m);
        fprime = eta_i * (fval + 1.0);
      } else {
        fval = eta_i * m;
        fprime = eta_i;
      }
      const double raw = fval + phi[i];
      const bool active = raw >= kRateFloor;
      const double rate = active ? raw : kRateFloor;
      const double y = bd.counts(b, i);
      loglik += y * std::log(rate) - rate - bd.lgamma1p(b, i);
      const double dr = active ? bd.scale * (y / rate - 1.0) : 0.0;
      dphi[i] += dr;
      M(b, i) = dr * fprime;
    }
  }
  const double theta_prior =
      static_cast<double>(n * K) * (kLog2 - kHalfLog2Pi) -
      0.5 * theta.squaredNorm();

  const double beta_var = pri.beta_scale * pri.beta_scale;
  const double w_var = pri.w_scale * pri.w_scale;
  Eigen::MatrixXd dtheta = M * B.transpose();
  dtheta -= bd.scale * theta;
  Eigen::MatrixXd dB = theta.transpose() * M;
  dB -= (B.array() / beta_var).matrix();

  Eigen::MatrixXd xdtheta = dtheta;
  xdtheta.array().colwise() *= bd.xi.array();
  const Eigen::MatrixXd dalpha = bd.gmat.transpose() * xdtheta;

  Eigen::ArrayXd dgate = (dalpha.array() * u.array()).rowwise().sum();
  dgate -= dphi.array() * link.eta.array() * w.array();
  Eigen::ArrayXd dsp = dgate * sm.array() / (r * r);
  Eigen::ArrayXd dsm = -dgate * sp.array() / (r * r);
  Eigen::ArrayXd dw =
      dphi.array() * link.eta.array() * omg - w.array() / w_var;
  Eigen::MatrixXd du = dalpha;
  du.array().colwise() *= gate;

  static const double kLgammaHalf = std::lgamma(0.5);
  double gp = 0.0;

  // Horseshoe groups over the encoder columns.
  Eigen::MatrixXd duL2(I, K), duLa(I, K);
  Eigen::VectorXd duT2(K), duTa(K);
  {
    const double l0 = pri.u_local_scale;
    const double t0 = pri.u_global_scale;
    for (long k = 0; k < K; ++k) {
      const double T = uT2[k];
      const double d = uTa[k];
      double qsum = 0.0;
      for (long i = 0; i < I; ++i) {
        const double x = u(i, k);
        const double Lv = uL2(i, k);
        const double a = uLa(i, k);
        const double q = x * x / Lv;
        qsum += q;
        gp += kLog2 - kHalfLog2Pi - 0.5 * std::log(Lv * T) - 0.5 * q / T;
        gp += -0.5 * std::log(a) - kLgammaHalf - 1.5 * std::log(Lv) -
              1.0 / (a * Lv);
        gp += -std::log(l0) - kLgammaHalf - 1.5 * std::log(a) -
              1.0 / (l0 * l0 * a);
        du(i, k) += -x / (Lv * T);
        duL2(i, k) = -2.0 / Lv + 0.5 * q / (Lv * T) + 1.0 / (a * Lv * Lv);
        duLa(i, k) = -2.0 / a + 1.0 / (a * a * Lv) + 1.0 / (l0 * l0 * a * a);
      }
      gp += -0.5 * std::log(d) - kLgammaHalf - 1.5 * std::log(T) -
            1.0 / (d * T);
      gp += -std::log(t0) - kLgammaHalf - 1.5 * std::log(d) -
            1.0 / (t0 * t0 * d);
      duT2[k] = -(static_cast<double>(I) + 3.0) / (2.0 * T) +
                0.5 * qsum / (T * T) + 1.0 / (d * T * T);
      duTa[k] = -2.0 / d + 1.0 / (d * d * T) + 1.0 / (t0 * t0 * d * d);
    }
  }

  // Horseshoe groups over the per-item gate pairs.
  Eigen::VectorXd dsL2(2 * I), dsLa(2 * I), dsT2v(I), dsTav(I);
  {
    const double l0 = pri.gate_local_scale;
    const double t0 = pri.gate_global_scale;
    for (long i = 0; i < I; ++i) {
      const double T = sT2[i];
      const double d = sTa[i];
      double qsum = 0.0;
      for (int h = 0; h < 2; ++h) {
        const long idx = h == 0 ? i : I + i;
        const double x = h == 0 ? sp[i] : sm[i];
        const double Lv = sL2[idx];
        const double a = sLa[idx];
        const double q = x * x / Lv;
        qsum += q;
        gp += kLog2 - kHalfLog2Pi - 0.5 * std::log(Lv * T) - 0.5 * q / T;
        gp += -0.5 * std::log(a) - kLgammaHalf - 1.5 * std::log(Lv) -
              1.0 / (a * Lv);
        gp += -std::log(l0) - kLgammaHalf - 1.5 * std::log(a) -
              1.0 / (l0 * l0 * a);
        const double dv = -x / (Lv * T);
        if (h == 0) {
          dsp[i] += dv;
        } else {
          dsm[i] += dv;
        }
        dsL2[idx] = -2.0 / Lv + 0.5 * q / (Lv * T) + 1.0 / (a * Lv * Lv);
        dsLa[idx] = -2.0 / a + 1.0 / (a * a * Lv) + 1.0 / (l0 * l0 * a * a);
      }
      gp += -0.5 * std::log(d) - kLgammaHalf - 1.5 * std::log(T) -
            1.0 / (d * T);
      gp += -std::log(t0) - kLgammaHalf - 1.5 * std::log(d) -
            1.0 / (t0 * t0 * d);
      dsT2v[i] = -5.0 / (2.0 * T) + 0.5 * qsum / (T * T) + 1.0 / (d * T * T);
      dsTav[i] = -2.0 / d + 1.0 / (d * d * T) + 1.0 / (t0 * t0 * d * d);
    }
  }

  gp += static_cast<double>(K * I) *
            (kLog2 - kHalfLog2Pi - std::log(pri.beta_scale)) -
        B.squaredNorm() / (2.0 * beta_var);
  gp += static_cast<double>(I) *
            (kLog2 - kHalfLog2Pi - std::log(pri.w_scale)) -
        w.squaredNorm() / (2.0 * w_var);

  Eigen::VectorXd dval(D);
  Eigen::Map<Eigen::MatrixXd>(dval.data() + L.u, I, K) = du;
  Eigen::Map<Eigen::VectorXd>(dval.data() + L.s_plus, I) = dsp.matrix();
  Eigen::Map<Eigen::VectorXd>(dval.data() + L.s_minus, I) = dsm.matrix();
  Eigen::Map<Eigen::VectorXd>(dval.data() + L.w, I) = dw.matrix();
  Eigen::Map<Eigen::MatrixXd>(dval.data() + L.beta, K, I) = dB;
  Eigen::Map<Eigen::MatrixXd>(dval.data() + L.u_hs_lambda2, I, K) = duL2;
  Eigen::Map<Eigen::MatrixXd>(dval.data() + L.u_hs_lambda_aux, I, K) = duLa;
  Eigen::Map<Eigen::VectorXd>(dval.data() + L.u_hs_tau2, K) = duT2;
  Eigen::Map<Eigen::VectorXd>(dval.data() + L.u_hs_tau_aux, K) = duTa;
  Eigen::Map<Eigen::VectorXd>(dval.data() + L.s_hs_lambda2, 2 * I) = dsL2;
  Eigen::Map<Eigen::VectorXd>(dval.data() + L.s_hs_lambda_aux, 2 * I) = dsLa;
  Eigen::Map<Eigen::VectorXd>(dval.data() + L.s_hs_tau2, I) = dsT2v;
  Eigen::Map<Eigen::VectorXd>(dval.data() + L.s_hs_tau_aux, I) = dsTav;

  JointGrad out;
  out.value = bd.scale * (loglik + theta_prior) + gp + jac;
  out.grad.resize(D);
  for (long j = 0; j < sp_end; ++j) {
    out.grad[j] = dval[j] * sig[j] + (1.0 - sig[j]);
  }
  for (long j = sp_end; j < D; ++j) {
    out.grad[j] = dval[j] * val[j] + 1.0;
  }
  return out;
}

struct ElboContext {
  const CountMatrix* Y = nullptr;
  LinkPair link;
  Eigen::VectorXd xi;  // all users
  Priors priors;
  long n_users = 0;
  double theta_scale = 0.3;  // fixed amortized-posterior width
};

// Monte Carlo pathwise ELBO over one minibatch: the average over draws of
// log joint + Jacobian along z = loc + scale * eps, plus the closed-form
// Gaussian entropies of the parameter factors and of the amortized
// representation posterior (the latter scaled with the batch, like the
// likelihood). Using analytic entropies instead of per-draw -log q removes
// their eps^2/2 noise, so the estimate collapses to a deterministic value
// as the scales shrink; along the reparameterized path both choices have
// the same gradient.
inline ElboEstimate elbo_estimate(const VariationalState& state,
                                  const ElboContext& ctx,
                                  std::span<const long> rows, long mc_samples,
                                  std::uint64_t seed, long step) {
  if (mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
  if (rows.empty()) throw ConfigError("empty minibatch");
  const ParamLayout& L = state.layout();
  const long D = L.dim();
  const long K = L.factors();
  const long n = static_cast<long>(rows.size());
  const double scale =
      static_cast<double>(ctx.n_users) / static_cast<double>(n);
  const BatchData bd = make_batch(*ctx.Y, rows, ctx.xi, ctx.link, scale);
  const Eigen::VectorXd s = state.scales();
  const double entropy =
      s.array().log().sum() + static_cast<double>(D) * (kHalfLog2Pi + 0.5);
  const double theta_entropy =
      ctx.theta_scale > 0.0
          ? scale * static_cast<double>(n) * static_cast<double>(K) *
                (std::log(ctx.theta_scale) + kHalfLog2Pi + 0.5)
          : 0.0;

  double value = 0.0;
  Eigen::VectorXd gz_mean = Eigen::VectorXd::Zero(D);
  Eigen::VectorXd gz_eps = Eigen::VectorXd::Zero(D);
  Eigen::VectorXd eps(D), z(D);
  Eigen::MatrixXd theta_eps(n, K);
  for (long m = 0; m < mc_samples; ++m) {
    CounterRng rng(seed, streams::elbo(step, m));
    for (long j = 0; j < D; ++j) eps[j] = rng.normal();
    if (ctx.theta_scale > 0.0) {
      for (long b = 0; b < n; ++b) {
        CounterRng row_rng(
            seed, streams::elbo_theta(step, m,
                                      rows[static_cast<std::size_t>(b)]));
        for (long k = 0; k < K; ++k) theta_eps(b, k) = row_rng.normal();
      }
    }
    z = state.loc + s.cwiseProduct(eps);
    const JointGrad jg =
        ctx.theta_scale > 0.0
            ? log_joint_grad(z, L, bd, ctx.link, ctx.priors, &theta_eps,
                             ctx.theta_scale)
            : log_joint_grad(z, L, bd, ctx.link, ctx.priors);
    value += jg.value;
    gz_mean += jg.grad;
    gz_eps += jg.grad.cwiseProduct(eps);
  }
  const double inv_m = 1.0 / static_cast<double>(mc_samples);
  ElboEstimate est;
  est.elbo = value * inv_m + entropy + theta_entropy;
  est.grad_loc = gz_mean * inv_m;
  const Eigen::ArrayXd sig_rs =
      state.raw_scale.unaryExpr([](double v) { return sigmoid(v); }).array();
  est.grad_raw_scale =
      ((gz_eps.array() * inv_m) * sig_rs + sig_rs / s.array()).matrix();

  if (!std::isfinite(est.elbo)) {
    throw NumericalError("objective", "non-finite ELBO estimate");
  }
  for (long j = 0; j < D; ++j) {
    if (!std::isfinite(est.grad_loc[j]) ||
        !std::isfinite(est.grad_raw_scale[j])) {
      throw NumericalError(L.block_at(j).name,
                           "non-finite ELBO gradient component");
    }
  }
  return est;
}

}  // namespace spenc
