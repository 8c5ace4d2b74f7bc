#pragma once

#include <cmath>
#include <limits>

#include "robustfit/common.hpp"

namespace robustfit {

inline double normal_pdf(double x, double mean = 0.0, double sd = 1.0) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * kPi));
}

inline double normal_cdf(double x, double mean = 0.0, double sd = 1.0) {
  const double z = (x - mean) / (sd * std::sqrt(2.0));
  return 0.5 * std::erfc(-z);
}

// Quantile by bracketed bisection on the erfc-based cdf, polished with one
// Newton step; plenty for confidence levels.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail("invalid-probability", "quantile needs p in (0,1)");
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-14) break;
  }
  double x = 0.5 * (lo + hi);
  const double f = normal_cdf(x) - p;
  const double d = normal_pdf(x);
  if (d > 0.0) x -= f / d;
  return x;
}

namespace detail {

inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for the upper tail.
inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) fail("invalid-gamma-arg", "gamma_p needs a>0, x>=0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

inline double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) fail("invalid-gamma-arg", "gamma_q needs a>0, x>=0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

inline double chi_square_cdf(double x, double dof) {
  return x <= 0.0 ? 0.0 : gamma_p(0.5 * dof, 0.5 * x);
}

inline double chi_square_upper_tail(double x, double dof) {
  return x <= 0.0 ? 1.0 : gamma_q(0.5 * dof, 0.5 * x);
}

}  // namespace robustfit
