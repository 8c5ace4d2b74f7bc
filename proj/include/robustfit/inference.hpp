#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "robustfit/common.hpp"
#include "robustfit/fitting.hpp"
#include "robustfit/linalg.hpp"
#include "robustfit/rng.hpp"
#include "robustfit/special.hpp"

namespace robustfit {

// Reading of the sigma powers in the xi/varsigma coefficients. The source
// formulas are ambiguous between powers of the standard deviation and powers
// of the variance; the quadrature/Monte-Carlo oracles select VariancePower,
// which is the default. SdPower is kept for comparison runs.
enum class SigmaConvention { VariancePower, SdPower };

inline const char* sigma_convention_name(SigmaConvention c) {
  return c == SigmaConvention::VariancePower ? "variance-power" : "sd-power";
}

// xi_alpha = (2 pi)^{-a/2} (sigma2)^{-(a+2)/2} (1+a)^{-3/2}
inline double xi_alpha(double alpha, double sigma2,
                       SigmaConvention conv = SigmaConvention::VariancePower) {
  const double expo = conv == SigmaConvention::VariancePower ? -(alpha + 2.0) / 2.0
                                                             : -(alpha + 2.0) / 4.0;
  return std::pow(2.0 * kPi, -alpha / 2.0) * std::pow(sigma2, expo) *
         std::pow(1.0 + alpha, -1.5);
}

// varsigma_alpha = (1/4) (2 pi)^{-a/2} (sigma2)^{-(a+4)/2} (2+a^2) (1+a)^{-5/2}
inline double varsigma_alpha(double alpha, double sigma2,
                             SigmaConvention conv = SigmaConvention::VariancePower) {
  const double expo = conv == SigmaConvention::VariancePower ? -(alpha + 4.0) / 2.0
                                                             : -(alpha + 4.0) / 4.0;
  return 0.25 * std::pow(2.0 * kPi, -alpha / 2.0) * std::pow(sigma2, expo) *
         (2.0 + alpha * alpha) * std::pow(1.0 + alpha, -2.5);
}

// Scale linking the stored per-observation K/J (estimating-function
// normalization, whose alpha -> 0 limit is the Fisher information) to the raw
// Tsallis objective: s_tsallis = alpha (1+alpha) psi. The sandwich V is
// invariant to this factor; ratio-statistic eigenvalues are not.
inline double tsallis_score_scale(double gamma) {
  const double a = gamma - 1.0;
  return a * (1.0 + a);
}

struct SandwichMatrices {
  Matrix K, J, V, G;                 // per-observation averages, free coords
  std::vector<std::string> labels;   // parameter names, sigma2 last when free
  std::vector<int> theta_indices;    // beta slot, or arity for sigma2
  double score_scale = 1.0;
  SigmaConvention convention = SigmaConvention::VariancePower;
  std::size_t n = 0;
};

// V = K^{-1} J K^{-T}; asymptotic covariance of the estimator is V/n.
inline Matrix sandwich_variance(const Matrix& k, const Matrix& j) {
  const Matrix kinv = inverse_spd(k, "singular-k", "sensitivity matrix K");
  return kinv * j * kinv.transposed();
}

namespace detail {

inline std::vector<int> free_beta_indices(const MeanFunction& family,
                                          const std::vector<int>& fixed_beta) {
  std::vector<int> free;
  for (int i = 0; i < family.arity(); ++i)
    if (std::find(fixed_beta.begin(), fixed_beta.end(), i) == fixed_beta.end())
      free.push_back(i);
  return free;
}

}  // namespace detail

inline SandwichMatrices sandwich_matrices(
    const RegressionModel& model, const Theta& theta, ObjectiveKind kind, double gamma,
    SigmaConvention conv = SigmaConvention::VariancePower,
    const std::vector<int>& fixed_beta = {}, bool sigma2_fixed = false) {
  if (kind == ObjectiveKind::Tsallis && !(gamma > 1.0))
    fail("invalid-gamma", "Tsallis gamma must be > 1");
  if (!(theta.sigma2 > 0.0)) fail("invalid-sigma2", "sigma2 must be > 0");

  const std::vector<int> free_beta = detail::free_beta_indices(model.family, fixed_beta);
  const std::size_t pb = free_beta.size();
  const std::size_t dim = pb + (sigma2_fixed ? 0 : 1);
  if (dim == 0) fail("invalid-options", "no free parameters for inference");

  // per-observation average Gram of the free mean-gradient components
  Matrix gram(pb, pb);
  const CurveParams cp = model.family.unflatten(theta.beta);
  std::vector<double> g(model.family.arity());
  for (std::size_t i = 0; i < model.n(); ++i) {
    model.family.grad_into(model.xs[i], cp, g);
    for (std::size_t a = 0; a < pb; ++a)
      for (std::size_t b = 0; b < pb; ++b)
        gram(a, b) += g[free_beta[a]] * g[free_beta[b]] / static_cast<double>(model.n());
  }
  if (pb > 0 && (!cholesky(gram) || spd_condition(gram) > 1e14))
    fail("singular-design",
         "mean-gradient Gram matrix is rank-deficient at this theta (condition " +
             std::to_string(spd_condition(gram)) + ")");

  SandwichMatrices out;
  out.convention = conv;
  out.n = model.n();
  out.K = Matrix(dim, dim);
  out.J = Matrix(dim, dim);

  const double v = theta.sigma2;
  double kb, jb, kv, jv;
  if (kind == ObjectiveKind::LogScore) {
    kb = jb = 1.0 / v;               // Fisher information blocks
    kv = jv = 0.5 / (v * v);
    out.score_scale = 1.0;
  } else {
    const double a = gamma - 1.0;
    const double xi1 = xi_alpha(a, v, conv);
    kb = xi1;
    jb = xi_alpha(2.0 * a, v, conv);
    kv = varsigma_alpha(a, v, conv);
    jv = varsigma_alpha(2.0 * a, v, conv) - 0.25 * a * a * xi1 * xi1;
    out.score_scale = tsallis_score_scale(gamma);
  }

  for (std::size_t a = 0; a < pb; ++a) {
    for (std::size_t b = 0; b < pb; ++b) {
      out.K(a, b) = kb * gram(a, b);
      out.J(a, b) = jb * gram(a, b);
    }
    out.labels.push_back(model.family.params()[free_beta[a]].name);
    out.theta_indices.push_back(free_beta[a]);
  }
  if (!sigma2_fixed) {
    out.K(pb, pb) = kv;
    out.J(pb, pb) = jv;
    out.labels.push_back("sigma2");
    out.theta_indices.push_back(model.family.arity());
  }

  out.V = sandwich_variance(out.K, out.J);
  out.G = inverse_spd(out.V, "singular-v", "sandwich variance V");
  return out;
}

inline SandwichMatrices sandwich_for(const FitResult& fit,
                                     SigmaConvention conv = SigmaConvention::VariancePower) {
  return sandwich_matrices(fit.model, fit.theta, fit.kind, fit.gamma, conv, fit.fixed_beta,
                           fit.fixed_sigma2.has_value());
}

// First-order downward bias of the fitted error variance caused by estimating
// p mean parameters: E[sigma2_hat] ~ sigma2 (1 - c(alpha) p / n). At alpha = 0
// this is the classical RSS/n degrees-of-freedom deficit (c = 1).
inline double sigma2_bias_c(double alpha) {
  const double a = alpha;
  return 2.0 * std::pow(1.0 + a, 3.0) * std::pow(1.0 + 2.0 * a, -2.5) *
         (a * a * a + 3.5 * a * a + 2.0 * a + 1.0) / (a * a + 2.0);
}

inline double sigma2_bias_correction(double alpha, int p_mean, std::size_t n) {
  const double denom = 1.0 - sigma2_bias_c(alpha) * static_cast<double>(p_mean) /
                                 static_cast<double>(n);
  return 1.0 / std::max(denom, 0.1);
}

struct ParameterInference {
  std::string name;
  double estimate;
  double se;
  double lower;
  double upper;
  // Finite-sample bias-corrected center (sigma2 only; NaN elsewhere).
  double bias_corrected = std::numeric_limits<double>::quiet_NaN();
};

struct WaldReport {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  double level = 0.95;
  std::vector<ParameterInference> parameters;
};

// Wald-type statistic n (theta_hat - theta0)^T V(theta_hat)^{-1}
// (theta_hat - theta0), asymptotically chi-square with d = dim(theta) free
// coordinates, plus per-parameter intervals at the requested level.
inline WaldReport wald_test(const FitResult& fit, const Theta& null_theta,
                            double level = 0.95,
                            SigmaConvention conv = SigmaConvention::VariancePower) {
  const SandwichMatrices sw = sandwich_for(fit, conv);
  const std::size_t dim = sw.K.rows();
  const double n = static_cast<double>(fit.model.n());

  std::vector<double> delta(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const int ti = sw.theta_indices[k];
    const double est = ti == fit.model.family.arity() ? fit.theta.sigma2 : fit.theta.beta[ti];
    const double nul = ti == fit.model.family.arity() ? null_theta.sigma2 : null_theta.beta[ti];
    delta[k] = est - nul;
  }
  const Matrix vinv = inverse_spd(sw.V, "singular-v", "sandwich variance V");

  WaldReport rep;
  rep.dof = static_cast<int>(dim);
  rep.level = level;
  rep.statistic = n * quad_form(delta, vinv);
  if (rep.statistic < 0.0 && rep.statistic > -1e-12) rep.statistic = 0.0;
  rep.p_value = chi_square_upper_tail(rep.statistic, static_cast<double>(rep.dof));

  const double z = normal_quantile(0.5 + level / 2.0);
  const int p_mean = fit.model.family.arity() - static_cast<int>(fit.fixed_beta.size());
  const double alpha = fit.kind == ObjectiveKind::Tsallis ? fit.gamma - 1.0 : 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const int ti = sw.theta_indices[k];
    ParameterInference pi;
    pi.name = sw.labels[k];
    pi.se = std::sqrt(sw.V(k, k) / n);
    if (ti == fit.model.family.arity()) {
      // Interval centered at the bias-corrected variance; the quoted point
      // estimate stays the raw minimizer.
      const double bc = sigma2_bias_correction(alpha, p_mean, fit.model.n());
      pi.estimate = fit.theta.sigma2;
      pi.bias_corrected = fit.theta.sigma2 * bc;
      pi.lower = pi.bias_corrected - z * pi.se * bc;
      pi.upper = pi.bias_corrected + z * pi.se * bc;
    } else {
      pi.estimate = fit.theta.beta[ti];
      pi.lower = pi.estimate - z * pi.se;
      pi.upper = pi.estimate + z * pi.se;
    }
    rep.parameters.push_back(pi);
  }
  return rep;
}

// p-value of sum_j w_j Z_j^2 >= value by seeded simulation.
inline double mixture_pvalue(std::span<const double> weights, double value,
                             int draws = 100000, std::uint64_t seed = 0x5EEDCAFEull) {
  Rng rng(seed);
  int count = 0;
  for (int i = 0; i < draws; ++i) {
    double q = 0.0;
    for (double w : weights) q += w * sqr(rng.normal());
    if (q >= value) ++count;
  }
  return (count + 1.0) / (draws + 1.0);
}

struct RatioReport {
  double statistic = 0.0;       // W_S = 2 { S(theta0) - S(theta_hat) }
  std::vector<double> weights;  // eigenvalues of J K^{-1} in objective units
  double p_value = 1.0;
  int dof = 0;
  std::string p_method = "simulation";
  int draws = 100000;
  std::uint64_t seed = 0x5EEDCAFEull;
  bool negative_eigenvalue_warning = false;
};

namespace detail {

inline void check_null_compatible(const FitResult& fit, const Theta& null_theta) {
  if (null_theta.beta.size() != fit.theta.beta.size())
    fail("invalid-null", "null theta has wrong beta dimension");
  if (!(null_theta.sigma2 > 0.0)) fail("invalid-sigma2", "null sigma2 must be > 0");
}

inline double objective_value(const RegressionModel& model, const Theta& theta,
                              ObjectiveKind kind, double gamma) {
  return kind == ObjectiveKind::LogScore
             ? log_score_total(model, theta)
             : tsallis_score_total(model, theta, TsallisConfig{gamma});
}

inline std::vector<double> objective_gradient_free(const RegressionModel& model,
                                                   const Theta& theta, ObjectiveKind kind,
                                                   double gamma,
                                                   const SandwichMatrices& sw) {
  const std::vector<double> full =
      kind == ObjectiveKind::LogScore
          ? log_score_gradient(model, theta)
          : tsallis_score_gradient(model, theta, TsallisConfig{gamma});
  std::vector<double> out(sw.theta_indices.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const int ti = sw.theta_indices[k];
    out[k] = ti == model.family.arity() ? full.back() : full[ti];
  }
  return out;
}

}  // namespace detail

// Scoring-rule ratio statistic with its weighted chi-square calibration; the
// weights are eigenvalues of J K^{-1} expressed in the same units as the
// objective that defines W_S.
inline RatioReport score_ratio_test(const RegressionModel& model, const FitResult& fit,
                                    const Theta& null_theta, const TsallisConfig& cfg,
                                    SigmaConvention conv = SigmaConvention::VariancePower,
                                    int draws = 100000, std::uint64_t seed = 0x5EEDCAFEull) {
  detail::check_null_compatible(fit, null_theta);
  const double gamma = fit.kind == ObjectiveKind::Tsallis ? cfg.gamma : 1.0;
  if (fit.kind == ObjectiveKind::Tsallis) cfg.validate();

  RatioReport rep;
  rep.draws = draws;
  rep.seed = seed;
  const double s0 = detail::objective_value(model, null_theta, fit.kind, gamma);
  rep.statistic = 2.0 * (s0 - fit.objective);
  if (rep.statistic < 0.0 && rep.statistic > -1e-9) rep.statistic = 0.0;

  const SandwichMatrices sw = sandwich_for(fit, conv);
  std::vector<double> eig = jk_inverse_eigenvalues(sw.J, sw.K);
  for (double& w : eig) {
    w *= sw.score_scale;
    if (w < -1e-10) rep.negative_eigenvalue_warning = true;
    if (w < 0.0) w = 0.0;
  }
  rep.weights = eig;
  rep.dof = static_cast<int>(eig.size());
  rep.p_value = mixture_pvalue(rep.weights, rep.statistic, draws, seed);
  return rep;
}

struct AdjustedRatioReport {
  double statistic = 0.0;  // A(theta0) * W_S
  double unadjusted = 0.0;
  double rescale_factor = 1.0;
  int dof = 0;
  double p_value = 1.0;
};

// First-order rescaled ratio statistic A(theta0) W_S with
// A = (s^T K^{-1} s) / (s^T K^{-1} J K^{-1} s), all pieces evaluated at the
// null point in consistent objective units; asymptotically chi-square_d.
inline AdjustedRatioReport adjusted_score_ratio(
    const RegressionModel& model, const FitResult& fit, const Theta& null_theta,
    const TsallisConfig& cfg, SigmaConvention conv = SigmaConvention::VariancePower) {
  detail::check_null_compatible(fit, null_theta);
  const double gamma = fit.kind == ObjectiveKind::Tsallis ? cfg.gamma : 1.0;

  const SandwichMatrices sw0 = sandwich_matrices(model, null_theta, fit.kind, gamma, conv,
                                                 fit.fixed_beta, fit.fixed_sigma2.has_value());
  std::vector<double> score =
      detail::objective_gradient_free(model, null_theta, fit.kind, gamma, sw0);
  const double s0_val = detail::objective_value(model, null_theta, fit.kind, gamma);
  if (inf_norm(score) <= std::max(1e-10, 1e-6 * (1.0 + std::abs(s0_val))))
    fail("undefined-rescaling",
         "rescale factor A is undefined where the total score vanishes");

  // total-score quadratic forms; the per-observation averaging of K/J cancels
  const Matrix k_obj = sw0.K.scaled(sw0.score_scale);
  const Matrix j_obj = sw0.J.scaled(sw0.score_scale * sw0.score_scale);
  const Matrix kinv = inverse_spd(k_obj, "singular-k", "sensitivity matrix K");
  const std::vector<double> kis = kinv.mul(score);
  const double num = dot(score, kis);
  const double den = quad_form(kis, j_obj);
  if (!(den > 0.0)) fail("undefined-rescaling", "degenerate rescale denominator");

  AdjustedRatioReport rep;
  rep.rescale_factor = num / den;
  rep.unadjusted = 2.0 * (s0_val - fit.objective);
  if (rep.unadjusted < 0.0 && rep.unadjusted > -1e-9) rep.unadjusted = 0.0;
  rep.statistic = rep.rescale_factor * rep.unadjusted;
  rep.dof = static_cast<int>(sw0.K.rows());
  rep.p_value = chi_square_upper_tail(rep.statistic, static_cast<double>(rep.dof));
  return rep;
}

}  // namespace robustfit
