#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "spenc/layout.hpp"
#include "spenc/optimizer.hpp"
#include "spenc/rng.hpp"
#include "spenc/transforms.hpp"

namespace spenc {

struct TrainConfig {
  double learning_rate = 0.05;
  long epochs = 100;
  long batch_size = 1024;
  long mc_samples = 4;
  long lookahead_k = 5;
  double lookahead_alpha = 0.5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // Fixed width of the amortized representation posterior
  // q(theta | y) = Normal(encoder output, theta_scale).
  double theta_scale = 0.3;
  std::uint64_t seed = 0;

  void validate() const {
    if (learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (mc_samples < 1) throw ConfigError("mc samples must be >= 1");
    if (lookahead_k < 1) throw ConfigError("lookahead k must be >= 1");
    if (lookahead_alpha <= 0.0 || lookahead_alpha > 1.0) {
      throw ConfigError("lookahead alpha must be in (0, 1]");
    }
    if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 ||
        adam_beta2 >= 1.0 || adam_eps <= 0.0) {
      throw ConfigError("invalid Adam parameters");
    }
    if (theta_scale < 0.0) {
      throw ConfigError("theta posterior scale must be >= 0");
    }
  }

  AdamConfig adam() const {
    return {learning_rate, adam_beta1, adam_beta2,
            adam_eps,      lookahead_k, lookahead_alpha};
  }
};

// Mean-field Gaussian factor per unconstrained scalar: location plus a raw
// scale mapped through softplus. Also owns the optimizer buffers, the
// Lookahead slow weights and the per-step ELBO trace. The representation is
// a latent with an amortized fixed-width posterior (see
// TrainConfig::theta_scale); it contributes no per-user state here.
class VariationalState {
 public:
  VariationalState() = default;

  VariationalState(ParamLayout layout, const TrainConfig& cfg)
      : layout_(std::move(layout)),
        loc(Eigen::VectorXd::Zero(layout_.dim())),
        raw_scale(Eigen::VectorXd::Zero(layout_.dim())),
        opt(2 * layout_.dim(), cfg.adam()) {}

  const ParamLayout& layout() const { return layout_; }

  Eigen::VectorXd scales() const {
    return raw_scale.unaryExpr([](double z) { return softplus(z); });
  }

  Eigen::VectorXd packed() const {
    Eigen::VectorXd p(2 * layout_.dim());
    p << loc, raw_scale;
    return p;
  }

  void unpack(const Eigen::VectorXd& p) {
    const long dim = layout_.dim();
    loc = p.head(dim);
    raw_scale = p.tail(dim);
  }

  ParamLayout layout_;
  Eigen::VectorXd loc;
  Eigen::VectorXd raw_scale;
  AdamLookahead opt;
  long step = 0;
  std::vector<std::pair<long, double>> elbo_trace;
};

// Data-scale-aware start: encoder/decoder magnitudes open at 1/sqrt(2KI)
// and the background gains at 2, which puts the initial rates near the
// per-item means (phi ~ eta, factor route ~ eta/4) instead of far above
// them; gate pairs open balanced at 1/2 and the log-space scale parameters
// at 0. Locations jitter with sd 0.1, raw scales start at softplus^-1(0.1),
// and the representation posterior scales open at the prior scale 1.
inline VariationalState init_state(long n_users, long n_items, long n_factors,
                                   const TrainConfig& cfg,
                                   std::uint64_t seed) {
  (void)n_users;
  cfg.validate();
  ParamLayout layout(n_items, n_factors);
  VariationalState state(layout, cfg);
  CounterRng rng(seed, streams::init());
  const double coupling_loc = softplus_inv(
      1.0 / std::sqrt(2.0 * static_cast<double>(n_factors) *
                      static_cast<double>(n_items)));
  const double gate_loc = softplus_inv(0.5);
  const double gain_loc = softplus_inv(2.0);
  const double jitter_sd = 0.1;
  for (const auto& block : layout.blocks()) {
    double center = 0.0;
    if (block.transform == TransformKind::softplus) {
      if (block.offset == layout.u || block.offset == layout.beta) {
        center = coupling_loc;
      } else if (block.offset == layout.w) {
        center = gain_loc;
      } else {
        center = gate_loc;
      }
    }
    for (long j = block.offset; j < block.offset + block.size; ++j) {
      state.loc[j] = center + jitter_sd * rng.normal();
    }
  }
  state.raw_scale.setConstant(softplus_inv(0.1));
  state.opt.attach(state.packed());
  return state;
}

struct ElboEstimate {
  double elbo = 0.0;
  Eigen::VectorXd grad_loc;
  Eigen::VectorXd grad_raw_scale;
};

// One ascent step on the packed (loc, raw_scale) vector; appends the
// estimate to the trace and advances the step counter.
inline void adam_lookahead_step(VariationalState& state,
                                const ElboEstimate& est) {
  const long dim = state.layout().dim();
  Eigen::VectorXd packed = state.packed();
  Eigen::VectorXd grad(2 * dim);
  grad << est.grad_loc, est.grad_raw_scale;
  state.opt.step(packed, grad);
  state.unpack(packed);
  state.elbo_trace.emplace_back(state.step, est.elbo);
  ++state.step;
}

}  // namespace spenc
