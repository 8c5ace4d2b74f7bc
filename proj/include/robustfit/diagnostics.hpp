#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "robustfit/common.hpp"
#include "robustfit/inference.hpp"

namespace robustfit {

// Influence of a contaminating observation y at design point x on the
// regression-coefficient estimator: K_bb^{-1} s_beta(y). Redescending in y
// for gamma > 1; proportional to (y - mu) dmu exp{-(gamma-1)(y-mu)^2/(2 s2)}.
inline std::vector<double> influence_beta(const RegressionModel& model, double y, double x,
                                          const Theta& theta, const TsallisConfig& cfg,
                                          SigmaConvention conv = SigmaConvention::VariancePower) {
  cfg.validate();
  const SandwichMatrices sw =
      sandwich_matrices(model, theta, ObjectiveKind::Tsallis, cfg.gamma, conv);
  const std::size_t pb = theta.beta.size();
  const CurveParams cp = model.family.unflatten(theta.beta);
  const double mu = model.family.eval(x, cp);
  const std::vector<double> dmu = model.family.grad(x, cp);
  std::vector<double> s(pb + 1);
  tsallis_point_gradient(y, mu, dmu, theta.sigma2, cfg.gamma, s);
  // beta block of K is block-diagonal, so invert it alone; scale cancels
  // between K^{-1} and the score.
  Matrix kbb(pb, pb);
  for (std::size_t a = 0; a < pb; ++a)
    for (std::size_t b = 0; b < pb; ++b) kbb(a, b) = sw.K(a, b) * sw.score_scale;
  const Matrix kinv = inverse_spd(kbb, "singular-design", "beta block of K");
  std::vector<double> sb(s.begin(), s.begin() + pb);
  return kinv.mul(sb);
}

// Influence on the error-variance estimator, in the source's displayed
// proportional form (sigma read literally as the standard deviation):
//   gamma e^{-(gamma-1) r^2/(2 s2)} [ sigma^{3-gamma}
//     - ((gamma-1)/2) sigma^{5-gamma} r^2 ] - (gamma-1) sigma^{3-gamma}/sqrt(gamma).
// Bounded in y, with limit -(gamma-1)/(sqrt(gamma) sigma^{gamma-3}).
inline double influence_sigma2(double y, double x, const RegressionModel& model,
                               const Theta& theta, const TsallisConfig& cfg) {
  cfg.validate();
  const CurveParams cp = model.family.unflatten(theta.beta);
  const double mu = model.family.eval(x, cp);
  const double r = y - mu;
  const double g = cfg.gamma;
  const double sigma = std::sqrt(theta.sigma2);
  const double damp = std::exp(-(g - 1.0) * r * r / (2.0 * theta.sigma2));
  const double s3 = std::pow(sigma, 3.0 - g);
  const double s5 = std::pow(sigma, 5.0 - g);
  return g * damp * (s3 - 0.5 * (g - 1.0) * s5 * r * r) - (g - 1.0) * s3 / std::sqrt(g);
}

// Per-observation downweights exp{-(gamma-1) r_i^2 / (2 sigma2)}; 1 at zero
// residual, decreasing in |r|.
inline std::vector<double> observation_weights(const RegressionModel& model,
                                               const FitResult& fit,
                                               const TsallisConfig& cfg) {
  cfg.validate();
  const std::vector<double> r = model.residuals(fit.curve());
  std::vector<double> w(r.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    w[i] = std::exp(-(cfg.gamma - 1.0) * r[i] * r[i] / (2.0 * fit.theta.sigma2));
  return w;
}

struct InfluenceCurve {
  std::string parameter;
  std::vector<double> grid;          // y values
  std::vector<double> normalized;    // K^{-1} s(y) coordinate
  std::vector<double> proportional;  // displayed proportional form
  double sup_abs_normalized = 0.0;
  double sup_abs_proportional = 0.0;
};

struct InfluenceGridOptions {
  double x = 0.0;                // design point; 0 = last design point of the model
  int points = 401;
  double half_width_sigmas = 8;  // grid spans mu +- this many sigma
};

// Influence curves for every free coordinate of the fit, on a y-grid around
// mu(x). For log-score fits the same K^{-1} s construction yields the
// (unbounded) maximum-likelihood influence.
inline std::vector<InfluenceCurve> influence_curves(const FitResult& fit,
                                                    const InfluenceGridOptions& opt = {},
                                                    SigmaConvention conv = SigmaConvention::VariancePower) {
  const RegressionModel& model = fit.model;
  const double x = opt.x > 0.0 ? opt.x : model.xs.back();
  const CurveParams cp = fit.curve();
  const double mu = model.family.eval(x, cp);
  const double sd = std::sqrt(fit.theta.sigma2);
  const SandwichMatrices sw = sandwich_for(fit, conv);
  const Matrix kinv =
      inverse_spd(sw.K.scaled(sw.score_scale), "singular-k", "sensitivity matrix K");
  const std::vector<double> dmu = model.family.grad(x, cp);

  std::vector<InfluenceCurve> curves(sw.labels.size());
  for (std::size_t k = 0; k < sw.labels.size(); ++k) {
    curves[k].parameter = sw.labels[k];
    curves[k].grid.reserve(opt.points);
  }

  const std::size_t pfull = fit.theta.beta.size();
  std::vector<double> s(pfull + 1);
  for (int gi = 0; gi < opt.points; ++gi) {
    const double y =
        mu + sd * opt.half_width_sigmas * (2.0 * gi / (opt.points - 1.0) - 1.0);
    if (fit.kind == ObjectiveKind::Tsallis)
      tsallis_point_gradient(y, mu, dmu, fit.theta.sigma2, fit.gamma, s);
    else
      log_point_gradient(y, mu, dmu, fit.theta.sigma2, s);
    // restrict to free coordinates, then premultiply K^{-1}
    std::vector<double> sfree(sw.labels.size());
    for (std::size_t k = 0; k < sfree.size(); ++k) {
      const int ti = sw.theta_indices[k];
      sfree[k] = ti == model.family.arity() ? s[pfull] : s[ti];
    }
    const std::vector<double> ifv = kinv.mul(sfree);
    for (std::size_t k = 0; k < sw.labels.size(); ++k) {
      const int ti = sw.theta_indices[k];
      double prop;
      if (ti == model.family.arity()) {
        prop = fit.kind == ObjectiveKind::Tsallis
                   ? influence_sigma2(y, x, model, fit.theta, TsallisConfig{fit.gamma})
                   : s[pfull];
      } else {
        const double damp =
            fit.kind == ObjectiveKind::Tsallis
                ? std::exp(-(fit.gamma - 1.0) * sqr(y - mu) / (2.0 * fit.theta.sigma2))
                : 1.0;
        prop = (y - mu) * dmu[ti] * damp;
      }
      curves[k].grid.push_back(y);
      curves[k].normalized.push_back(ifv[k]);
      curves[k].proportional.push_back(prop);
      curves[k].sup_abs_normalized = std::max(curves[k].sup_abs_normalized, std::abs(ifv[k]));
      curves[k].sup_abs_proportional =
          std::max(curves[k].sup_abs_proportional, std::abs(prop));
    }
  }
  return curves;
}

}  // namespace robustfit
