#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "spenc/errors.hpp"

namespace spenc {

enum class LinkKind { identity_scaled, log_link };

inline std::string link_name(LinkKind kind) {
  return kind == LinkKind::identity_scaled ? "identity" : "log";
}

inline LinkKind link_from_name(const std::string& name) {
  if (name == "identity") return LinkKind::identity_scaled;
  if (name == "log") return LinkKind::log_link;
  throw ConfigError("unknown link '" + name + "' (expected identity or log)");
}

// Per-item link pair. Both variants are monotonically increasing with a
// fixed point at zero, so all-zero feature rows encode to zero.
//   identity: f_i(x) = eta_i * x,        g_i(y) = y / eta_i
//   log:      f_i(x) = exp(eta_i*x) - 1, g_i(y) = log(y/eta_i + 1)
struct LinkPair {
  LinkKind kind = LinkKind::identity_scaled;
  Eigen::VectorXd eta;

  double f(long i, double x) const {
    return kind == LinkKind::identity_scaled ? eta[i] * x
                                             : std::expm1(eta[i] * x);
  }

  double f_prime(long i, double x) const {
    return kind == LinkKind::identity_scaled ? eta[i]
                                             : eta[i] * std::exp(eta[i] * x);
  }

  double g(long i, double y) const {
    return kind == LinkKind::identity_scaled ? y / eta[i]
                                             : std::log1p(y / eta[i]);
  }
};

}  // namespace spenc
