#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "spenc/errors.hpp"

namespace spenc {

struct AdamConfig {
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long lookahead_k = 5;
  double lookahead_alpha = 0.5;
};

// Adam with bias correction on the fast weights, wrapped in Lookahead:
// every lookahead_k steps the slow weights move slow += alpha*(fast - slow)
// and the fast weights are reset onto them. step() performs gradient
// ascent. With lookahead_k = 1 and alpha = 1 the trajectory is plain Adam.
class AdamLookahead {
 public:
  AdamLookahead() = default;

  AdamLookahead(long dim, const AdamConfig& cfg)
      : cfg_(cfg),
        m_(Eigen::VectorXd::Zero(dim)),
        v_(Eigen::VectorXd::Zero(dim)),
        slow_(Eigen::VectorXd::Zero(dim)) {}

  void attach(const Eigen::VectorXd& x) { slow_ = x; }

  void step(Eigen::VectorXd& x, const Eigen::VectorXd& grad) {
    if (!grad.allFinite()) {
      throw NumericalError("gradient", "non-finite gradient in Adam step");
    }
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    x.array() += cfg_.learning_rate * (m_.array() / c1) /
                 ((v_.array() / c2).sqrt() + cfg_.eps);
    if (t_ % cfg_.lookahead_k == 0) {
      slow_ += cfg_.lookahead_alpha * (x - slow_);
      x = slow_;
    }
  }

  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }
  const Eigen::VectorXd& slow_weights() const { return slow_; }

  void restore(long t, Eigen::VectorXd m, Eigen::VectorXd v,
               Eigen::VectorXd slow) {
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
    slow_ = std::move(slow);
  }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  Eigen::VectorXd m_, v_, slow_;
};

}  // namespace spenc
