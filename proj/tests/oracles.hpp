// Independent numerical oracles used to freeze expected values in the test
// suite. Everything here is deliberately naive (adaptive quadrature, series
// summation, finite differences) and shares no code with the library paths
// it checks.
#pragma once

#include <cmath>
#include <functional>

namespace oracles {

inline double simpson(const std::function<double(double)>& f, double a,
                      double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f,
                                   double a, double b, double fa, double fm,
                                   double fb, double whole, double tol,
                                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(f, a, m, fa, flm, fm);
  const double right = simpson(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0,
                              depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0,
                              depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-12, int depth = 40) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, simpson(f, a, b, fa, fm, fb),
                              tol, depth);
}

inline double inv_gamma_pdf(double x, double shape, double scale) {
  if (x <= 0.0) return 0.0;
  return std::exp(shape * std::log(scale) - std::lgamma(shape) -
                  (shape + 1.0) * std::log(x) - scale / x);
}

// Density of x when x^2 ~ IG(1/2, 1/lam) mixed over lam ~ IG(1/2, 1/sigma^2),
// integrated numerically over lam = exp(v). The analytic answer is the
// half-Cauchy(0, sigma) density.
inline double halfcauchy_via_aux_pair(double x, double sigma) {
  const double t = x * x;
  auto integrand = [&](double v) {
    const double lam = std::exp(v);
    return inv_gamma_pdf(t, 0.5, 1.0 / lam) *
           inv_gamma_pdf(lam, 0.5, 1.0 / (sigma * sigma)) * lam;
  };
  const double density_t = integrate(integrand, -60.0, 60.0, 1e-12, 48);
  return 2.0 * x * density_t;
}

inline double half_cauchy_pdf(double x, double sigma) {
  return 2.0 / (M_PI * sigma * (1.0 + (x / sigma) * (x / sigma)));
}

// E[log Poisson(y; 1)] under y ~ Poisson(1), by series summation.
inline double poisson_unit_expected_logpmf() {
  double acc = 0.0;
  double log_yfact = 0.0;
  for (long y = 0; y <= 80; ++y) {
    if (y > 0) log_yfact += std::log(static_cast<double>(y));
    const double pmf = std::exp(-1.0 - log_yfact);
    acc += pmf * (-1.0 - log_yfact);
  }
  return acc;
}

}  // namespace oracles
