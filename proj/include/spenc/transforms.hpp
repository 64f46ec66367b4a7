#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "spenc/layout.hpp"

namespace spenc {

// Numerically stable softplus and friends.
inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double softplus_inv(double s) { return std::log(std::expm1(s)); }

inline double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                  : std::exp(z) / (1.0 + std::exp(z));
}

// log d softplus(z)/dz = log sigmoid(z) = -softplus(-z).
inline double log_sigmoid(double z) { return -softplus(-z); }

// Map an unconstrained vector to the constrained space: magnitudes through
// softplus, squared scales through exp. Returns the constrained values and
// the accumulated log |Jacobian| of the map.
struct ConstrainResult {
  Eigen::VectorXd values;
  double log_jacobian = 0.0;
};

inline ConstrainResult constrain(const Eigen::VectorXd& z,
                                 const ParamLayout& layout) {
  ConstrainResult out;
  out.values.resize(z.size());
  for (const auto& block : layout.blocks()) {
    if (block.transform == TransformKind::softplus) {
      for (long j = block.offset; j < block.offset + block.size; ++j) {
        out.values[j] = softplus(z[j]);
        out.log_jacobian += log_sigmoid(z[j]);
      }
    } else {
      for (long j = block.offset; j < block.offset + block.size; ++j) {
        out.values[j] = std::exp(z[j]);
        out.log_jacobian += z[j];
      }
    }
  }
  return out;
}

}  // namespace spenc
