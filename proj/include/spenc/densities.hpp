#pragma once

#include <cmath>

#include "spenc/errors.hpp"

namespace spenc {

constexpr double kLog2 = 0.69314718055994530941723212145818;
constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;

// log N+(x; 0, sd) for x >= 0; the half-normal doubles the normal density.
inline double half_normal_logpdf(double x, double sd) {
  const double t = x / sd;
  return kLog2 - kHalfLog2Pi - std::log(sd) - 0.5 * t * t;
}

// log InverseGamma(x; shape a, scale b) = a log b - lgamma(a) - (a+1) log x - b/x.
inline double inv_gamma_logpdf(double x, double shape, double scale) {
  if (x <= 0.0) throw std::domain_error("inverse-gamma support is x > 0");
  return shape * std::log(scale) - std::lgamma(shape) -
         (shape + 1.0) * std::log(x) - scale / x;
}

// log Poisson(y; rate) for rate > 0.
inline double poisson_logpmf(long y, double rate) {
  return static_cast<double>(y) * std::log(rate) - rate -
         std::lgamma(static_cast<double>(y) + 1.0);
}

}  // namespace spenc
