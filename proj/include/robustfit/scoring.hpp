#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "robustfit/common.hpp"
#include "robustfit/dataset.hpp"

namespace robustfit {

// Full parameter theta = (beta, sigma2); beta is the family's flattened
// curve-parameter vector.
struct Theta {
  std::vector<double> beta;
  double sigma2 = 1.0;
};

struct TsallisConfig {
  double gamma = 1.5;
  double alpha() const { return gamma - 1.0; }
  void validate() const {
    if (!(gamma > 1.0)) fail("invalid-gamma", "Tsallis gamma must be > 1");
  }
};

namespace detail {

inline void require_sigma2(double sigma2) {
  if (!(sigma2 > 0.0)) fail("invalid-sigma2", "sigma2 must be > 0");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Log-score (negative log-likelihood) of the normal nonlinear model.
// ---------------------------------------------------------------------------

inline double log_point_score(double y, double mu, double sigma2) {
  detail::require_sigma2(sigma2);
  return 0.5 * std::log(2.0 * kPi * sigma2) + sqr(y - mu) / (2.0 * sigma2);
}

inline double log_score_total(const RegressionModel& model, const Theta& theta) {
  detail::require_sigma2(theta.sigma2);
  const CurveParams p = model.family.unflatten(theta.beta);
  std::vector<double> terms(model.n());
  for (std::size_t i = 0; i < model.n(); ++i)
    terms[i] = log_point_score(model.ys[i], model.family.eval(model.xs[i], p), theta.sigma2);
  return pairwise_sum(terms);
}

// Writes d/d(beta, sigma2) of the per-observation log score into out (p+1).
inline void log_point_gradient(double y, double mu, std::span<const double> dmu,
                               double sigma2, std::span<double> out) {
  const double r = y - mu;
  const std::size_t p = dmu.size();
  for (std::size_t j = 0; j < p; ++j) out[j] = -r * dmu[j] / sigma2;
  out[p] = 0.5 / sigma2 - 0.5 * r * r / (sigma2 * sigma2);
}

// ---------------------------------------------------------------------------
// Tsallis score. Per-observation closed form for the normal model:
//   S(y) = A [ (gamma-1)/sqrt(gamma) - gamma E ],
//   A = (2 pi sigma2)^{-(gamma-1)/2},  E = exp(-(gamma-1) r^2 / (2 sigma2)).
// ---------------------------------------------------------------------------

inline double tsallis_point_score(double y, double mu, double sigma2, double gamma) {
  detail::require_sigma2(sigma2);
  if (!(gamma > 1.0)) fail("invalid-gamma", "Tsallis gamma must be > 1");
  const double a = gamma - 1.0;
  const double A = std::exp(-0.5 * a * std::log(2.0 * kPi * sigma2));
  const double E = std::exp(-a * sqr(y - mu) / (2.0 * sigma2));
  return A * (a / std::sqrt(gamma) - gamma * E);
}

inline double tsallis_score_total(const RegressionModel& model, const Theta& theta,
                                  const TsallisConfig& cfg) {
  cfg.validate();
  detail::require_sigma2(theta.sigma2);
  const CurveParams p = model.family.unflatten(theta.beta);
  std::vector<double> terms(model.n());
  for (std::size_t i = 0; i < model.n(); ++i)
    terms[i] = tsallis_point_score(model.ys[i], model.family.eval(model.xs[i], p),
                                   theta.sigma2, cfg.gamma);
  return pairwise_sum(terms);
}

// Per-observation gradient of the Tsallis score in (beta, sigma2):
//   s_beta   = -gamma (gamma-1) A E (r / sigma2) dmu
//   s_sigma2 = ((gamma-1) A / (2 sigma2)) [ gamma E (1 - r^2/sigma2)
//                                           - (gamma-1)/sqrt(gamma) ]
inline void tsallis_point_gradient(double y, double mu, std::span<const double> dmu,
                                   double sigma2, double gamma, std::span<double> out) {
  const double a = gamma - 1.0;
  const double r = y - mu;
  const double A = std::exp(-0.5 * a * std::log(2.0 * kPi * sigma2));
  const double E = std::exp(-a * r * r / (2.0 * sigma2));
  const std::size_t p = dmu.size();
  const double coef = -gamma * a * A * E * r / sigma2;
  for (std::size_t j = 0; j < p; ++j) out[j] = coef * dmu[j];
  out[p] = (a * A / (2.0 * sigma2)) *
           (gamma * E * (1.0 - r * r / sigma2) - a / std::sqrt(gamma));
}

namespace detail {

template <typename PointGradFn>
std::vector<double> total_gradient(const RegressionModel& model, const Theta& theta,
                                   PointGradFn&& point_grad) {
  const CurveParams p = model.family.unflatten(theta.beta);
  const std::size_t d = theta.beta.size() + 1;
  const std::size_t n = model.n();
  std::vector<double> per_obs(n * d);
  std::vector<double> dmu(theta.beta.size());
  for (std::size_t i = 0; i < n; ++i) {
    model.family.grad_into(model.xs[i], p, dmu);
    point_grad(model.ys[i], model.family.eval(model.xs[i], p), dmu,
               std::span<double>(per_obs.data() + i * d, d));
  }
  std::vector<double> grad(d), column(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = per_obs[i * d + j];
    grad[j] = pairwise_sum(column);
  }
  return grad;
}

}  // namespace detail

inline std::vector<double> tsallis_score_gradient(const RegressionModel& model,
                                                  const Theta& theta,
                                                  const TsallisConfig& cfg) {
  cfg.validate();
  detail::require_sigma2(theta.sigma2);
  return detail::total_gradient(
      model, theta, [&](double y, double mu, std::span<const double> dmu, std::span<double> out) {
        tsallis_point_gradient(y, mu, dmu, theta.sigma2, cfg.gamma, out);
      });
}

inline std::vector<double> log_score_gradient(const RegressionModel& model,
                                              const Theta& theta) {
  detail::require_sigma2(theta.sigma2);
  return detail::total_gradient(
      model, theta, [&](double y, double mu, std::span<const double> dmu, std::span<double> out) {
        log_point_gradient(y, mu, dmu, theta.sigma2, out);
      });
}

}  // namespace robustfit
