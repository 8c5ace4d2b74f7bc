#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "robustfit/common.hpp"

namespace robustfit {

// Unified curve parameterization: b steepness, c lower asymptote, d upper
// asymptote, e inflection-location (> 0), f asymmetry exponent (> 0, fixed
// at 1 for four-parameter families). Increasing sigmoids have b < 0.
struct CurveParams {
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  double e = 1.0;
  double f = 1.0;

  double& slot(int i) {
    switch (i) {
      case 0: return b;
      case 1: return c;
      case 2: return d;
      case 3: return e;
      default: return f;
    }
  }
  double slot(int i) const {
    switch (i) {
      case 0: return b;
      case 1: return c;
      case 2: return d;
      case 3: return e;
      default: return f;
    }
  }
};

struct ParamSpec {
  std::string name;
  bool positive = false;  // optimized on log scale; lower bound 0 (open)
};

namespace detail {

inline double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

inline void require_positive_x(double x, double e) {
  if (!(x > 0.0)) fail("domain-error", "x must be > 0 (got " + std::to_string(x) + ")");
  if (!(e > 0.0)) fail("domain-error", "parameter e must be > 0");
}

}  // namespace detail

// Five-parameter log-logistic mean: c + (d-c) / (1 + exp(b (log x - log e)))^f.
inline double eval_loglogistic5(double x, const CurveParams& p) {
  detail::require_positive_x(x, p.e);
  if (!(p.f > 0.0)) fail("domain-error", "parameter f must be > 0");
  const double t = p.b * (std::log(x) - std::log(p.e));
  return p.c + (p.d - p.c) * std::exp(-p.f * detail::softplus(t));
}

// Analytic partials (d/db, d/dc, d/dd, d/de, d/df) of eval_loglogistic5.
inline void grad_loglogistic5(double x, const CurveParams& p, std::span<double> out) {
  detail::require_positive_x(x, p.e);
  if (!(p.f > 0.0)) fail("domain-error", "parameter f must be > 0");
  const double dlog = std::log(x) - std::log(p.e);
  const double t = p.b * dlog;
  const double sp = detail::softplus(t);          // log(1 + e^t)
  const double logistic = std::exp(-p.f * sp);    // (1+e^t)^{-f}
  const double w1 = std::exp(-(p.f + 1.0) * sp + t);  // e^t (1+e^t)^{-f-1}
  const double span_cd = p.d - p.c;
  out[0] = -span_cd * p.f * w1 * dlog;
  out[1] = 1.0 - logistic;
  out[2] = logistic;
  out[3] = span_cd * p.f * w1 * p.b / p.e;
  out[4] = -span_cd * sp * logistic;
}

namespace detail {

inline double eval_weibull1(double x, const CurveParams& p) {
  require_positive_x(x, p.e);
  const double t = p.b * (std::log(x) - std::log(p.e));
  const double u = std::exp(std::min(t, 700.0));
  return p.c + (p.d - p.c) * std::exp(-u);
}

inline void grad_weibull1(double x, const CurveParams& p, std::span<double> out) {
  require_positive_x(x, p.e);
  const double dlog = std::log(x) - std::log(p.e);
  const double t = p.b * dlog;
  const double u = std::exp(std::min(t, 700.0));
  const double outer = std::exp(-u);
  const double span_cd = p.d - p.c;
  out[0] = -span_cd * outer * u * dlog;
  out[1] = 1.0 - outer;
  out[2] = outer;
  out[3] = span_cd * outer * u * p.b / p.e;
}

// Gompertz on the raw x scale: c + (d-c) exp(-exp(b (x - e))).
inline double eval_gompertz(double x, const CurveParams& p) {
  require_positive_x(x, p.e);
  const double u = std::exp(std::min(p.b * (x - p.e), 700.0));
  return p.c + (p.d - p.c) * std::exp(-u);
}

inline void grad_gompertz(double x, const CurveParams& p, std::span<double> out) {
  require_positive_x(x, p.e);
  const double u = std::exp(std::min(p.b * (x - p.e), 700.0));
  const double outer = std::exp(-u);
  const double span_cd = p.d - p.c;
  out[0] = -span_cd * outer * u * (x - p.e);
  out[1] = 1.0 - outer;
  out[2] = outer;
  out[3] = span_cd * outer * u * p.b;
}

}  // namespace detail

// A named curve family: evaluation, analytic gradient in the free parameters,
// per-parameter metadata and a data-driven starting-value heuristic.
class MeanFunction {
public:
  using EvalFn = std::function<double(double, const CurveParams&)>;
  using GradFn = std::function<void(double, const CurveParams&, std::span<double>)>;
  using SelfStartFn =
      std::function<CurveParams(std::span<const double>, std::span<const double>)>;

  MeanFunction() = default;
  MeanFunction(std::string name, std::vector<ParamSpec> params, EvalFn eval, GradFn grad,
               SelfStartFn self_start)
      : name_(std::move(name)),
        params_(std::move(params)),
        eval_(std::move(eval)),
        grad_(std::move(grad)),
        self_start_(std::move(self_start)) {}

  const std::string& name() const { return name_; }
  int arity() const { return static_cast<int>(params_.size()); }
  const std::vector<ParamSpec>& params() const { return params_; }

  double eval(double x, const CurveParams& p) const { return eval_(x, p); }

  std::vector<double> grad(double x, const CurveParams& p) const {
    std::vector<double> g(params_.size());
    grad_(x, p, g);
    return g;
  }
  void grad_into(double x, const CurveParams& p, std::span<double> out) const {
    grad_(x, p, out);
  }

  CurveParams self_start(std::span<const double> xs, std::span<const double> ys) const {
    return self_start_(xs, ys);
  }

  std::vector<double> flatten(const CurveParams& p) const {
    std::vector<double> beta(params_.size());
    for (int i = 0; i < arity(); ++i) beta[i] = p.slot(i);
    return beta;
  }

  CurveParams unflatten(std::span<const double> beta) const {
    CurveParams p;
    for (int i = 0; i < arity(); ++i) p.slot(i) = beta[i];
    return p;
  }

  int param_index(const std::string& param_name) const {
    for (int i = 0; i < arity(); ++i)
      if (params_[i].name == param_name) return i;
    return -1;
  }

private:
  std::string name_;
  std::vector<ParamSpec> params_;
  EvalFn eval_;
  GradFn grad_;
  SelfStartFn self_start_;
};

namespace detail {

struct StartSummary {
  double c0, d0, e0;
  double range;
};

inline StartSummary start_summary(std::span<const double> xs, std::span<const double> ys,
                                  std::size_t min_points) {
  if (xs.size() != ys.size()) fail("degenerate-data", "x/y length mismatch");
  if (xs.size() < min_points)
    fail("degenerate-data", "need at least " + std::to_string(min_points) + " points");
  const double ymin = *std::min_element(ys.begin(), ys.end());
  const double ymax = *std::max_element(ys.begin(), ys.end());
  const double range = ymax - ymin;
  if (!(range > 0.0)) fail("degenerate-data", "responses are constant");
  const double c0 = ymin;
  const double d0 = ymax > 0.0 ? 1.05 * ymax : ymax + 0.05 * range;
  const double half = 0.5 * (c0 + d0);
  double e0 = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 1; i < ys.size(); ++i) {
    const bool crossed = (ys[i - 1] - half) * (ys[i] - half) <= 0.0 && ys[i] != ys[i - 1];
    if (crossed) {
      const double w = (half - ys[i - 1]) / (ys[i] - ys[i - 1]);
      e0 = xs[i - 1] + w * (xs[i] - xs[i - 1]);
      break;
    }
  }
  if (!std::isfinite(e0) || !(e0 > 0.0)) {
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    e0 = sorted[sorted.size() / 2];
  }
  return {c0, d0, e0, range};
}

// Slope of z on t by ordinary least squares.
inline double ols_slope(std::span<const double> t, std::span<const double> z) {
  const std::size_t n = t.size();
  double tm = 0, zm = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tm += t[i];
    zm += z[i];
  }
  tm /= n;
  zm /= n;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (t[i] - tm) * (z[i] - zm);
    den += (t[i] - tm) * (t[i] - tm);
  }
  return den > 0.0 ? num / den : 0.0;
}

// Steepness from logit-transformed responses regressed on log x:
// log((d0 - y)/(y - c0)) ~ b log x - b log e for the log-logistic family.
inline double loglogistic_b0(std::span<const double> xs, std::span<const double> ys,
                             const StartSummary& s) {
  std::vector<double> t, z;
  const double eps = 1e-3 * s.range;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double yc = std::clamp(ys[i], s.c0 + eps, s.d0 - eps);
    t.push_back(std::log(xs[i]));
    z.push_back(std::log((s.d0 - yc) / (yc - s.c0)));
  }
  double b0 = ols_slope(t, z);
  if (!std::isfinite(b0) || std::abs(b0) < 1e-3) {
    const bool increasing = ys.back() > ys.front();
    b0 = increasing ? -1.0 : 1.0;
  }
  return b0;
}

inline CurveParams self_start_loglogistic(std::span<const double> xs,
                                          std::span<const double> ys, int arity) {
  const StartSummary s = start_summary(xs, ys, static_cast<std::size_t>(arity));
  CurveParams p;
  p.c = s.c0;
  p.d = s.d0;
  p.e = s.e0;
  p.b = loglogistic_b0(xs, ys, s);
  p.f = 1.0;
  return p;
}

inline CurveParams self_start_gompertz(std::span<const double> xs,
                                       std::span<const double> ys) {
  const StartSummary s = start_summary(xs, ys, 4);
  CurveParams p;
  p.c = s.c0;
  p.d = s.d0;
  p.e = s.e0;
  std::vector<double> t, z;
  const double eps = 1e-3 * s.range;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double yc = std::clamp(ys[i], s.c0 + eps, s.d0 - eps);
    t.push_back(xs[i]);
    z.push_back(std::log(-std::log((yc - s.c0) / (s.d0 - s.c0))));
  }
  double b0 = ols_slope(t, z);
  if (!std::isfinite(b0) || std::abs(b0) < 1e-6) b0 = ys.back() > ys.front() ? -0.1 : 0.1;
  p.b = b0;
  return p;
}

}  // namespace detail

inline MeanFunction make_loglogistic5() {
  return MeanFunction(
      "log-logistic-5",
      {{"b"}, {"c"}, {"d"}, {"e", true}, {"f", true}},
      [](double x, const CurveParams& p) { return eval_loglogistic5(x, p); },
      [](double x, const CurveParams& p, std::span<double> out) {
        grad_loglogistic5(x, p, out);
      },
      [](std::span<const double> xs, std::span<const double> ys) {
        return detail::self_start_loglogistic(xs, ys, 5);
      });
}

inline MeanFunction make_loglogistic4() {
  return MeanFunction(
      "log-logistic-4",
      {{"b"}, {"c"}, {"d"}, {"e", true}},
      [](double x, const CurveParams& p) {
        CurveParams q = p;
        q.f = 1.0;
        return eval_loglogistic5(x, q);
      },
      [](double x, const CurveParams& p, std::span<double> out) {
        CurveParams q = p;
        q.f = 1.0;
        double g5[5];
        grad_loglogistic5(x, q, g5);
        for (int i = 0; i < 4; ++i) out[i] = g5[i];
      },
      [](std::span<const double> xs, std::span<const double> ys) {
        return detail::self_start_loglogistic(xs, ys, 4);
      });
}

inline MeanFunction make_weibull1() {
  return MeanFunction(
      "weibull-1",
      {{"b"}, {"c"}, {"d"}, {"e", true}},
      [](double x, const CurveParams& p) { return detail::eval_weibull1(x, p); },
      [](double x, const CurveParams& p, std::span<double> out) {
        detail::grad_weibull1(x, p, out);
      },
      [](std::span<const double> xs, std::span<const double> ys) {
        return detail::self_start_loglogistic(xs, ys, 4);
      });
}

inline MeanFunction make_gompertz() {
  return MeanFunction(
      "gompertz",
      {{"b"}, {"c"}, {"d"}, {"e", true}},
      [](double x, const CurveParams& p) { return detail::eval_gompertz(x, p); },
      [](double x, const CurveParams& p, std::span<double> out) {
        detail::grad_gompertz(x, p, out);
      },
      [](std::span<const double> xs, std::span<const double> ys) {
        return detail::self_start_gompertz(xs, ys);
      });
}

// Constant mean, useful for location-model scenarios and calibration studies.
inline MeanFunction make_constant() {
  return MeanFunction(
      "constant",
      {{"m"}},
      [](double, const CurveParams& p) { return p.b; },
      [](double, const CurveParams&, std::span<double> out) { out[0] = 1.0; },
      [](std::span<const double>, std::span<const double> ys) {
        if (ys.empty()) fail("degenerate-data", "empty response vector");
        CurveParams p;
        double m = 0;
        for (double y : ys) m += y;
        p.b = m / static_cast<double>(ys.size());
        return p;
      });
}

inline const std::vector<MeanFunction>& curve_catalog() {
  static const std::vector<MeanFunction> catalog = {
      make_loglogistic5(), make_loglogistic4(), make_weibull1(), make_gompertz(),
      make_constant()};
  return catalog;
}

inline const MeanFunction& find_family(const std::string& name) {
  for (const MeanFunction& f : curve_catalog())
    if (f.name() == name) return f;
  std::string known;
  for (const MeanFunction& f : curve_catalog()) known += " " + f.name();
  fail("unknown-model", "unknown model '" + name + "'; known:" + known);
}

}  // namespace robustfit
