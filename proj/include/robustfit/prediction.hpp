#pragma once

#include <cmath>
#include <vector>

#include "robustfit/common.hpp"
#include "robustfit/fitting.hpp"
#include "robustfit/special.hpp"

namespace robustfit {

// Estimative predictive density p_e(z) = N(mu(z, beta_hat), sigma2_hat):
// the model density with the unknown parameter replaced by the point estimate.
struct PredictiveDensity {
  double z_design = 0.0;
  ObjectiveKind kind = ObjectiveKind::Tsallis;
  double gamma = 1.5;
  double mean = 0.0;
  double sd = 1.0;
  std::vector<double> grid;
  std::vector<double> density;
};

inline PredictiveDensity estimative_density(const FitResult& fit, double z_design,
                                            int grid_points = 401,
                                            double half_width_sigmas = 8.0) {
  if (!(z_design > 0.0)) fail("domain-error", "future design point must be > 0");
  PredictiveDensity pd;
  pd.z_design = z_design;
  pd.kind = fit.kind;
  pd.gamma = fit.gamma;
  pd.mean = fit.model.family.eval(z_design, fit.curve());
  pd.sd = std::sqrt(fit.theta.sigma2);
  pd.grid.resize(grid_points);
  pd.density.resize(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    pd.grid[i] =
        pd.mean + pd.sd * half_width_sigmas * (2.0 * i / (grid_points - 1.0) - 1.0);
    pd.density[i] = normal_pdf(pd.grid[i], pd.mean, pd.sd);
  }
  return pd;
}

// Trapezoid integral of the density on the reported grid extended to +-10 sd.
inline double density_integral(const PredictiveDensity& pd, double extend_to_sigmas = 10.0) {
  const int m = 801;
  double integral = 0.0;
  double prev_x = pd.mean - extend_to_sigmas * pd.sd;
  double prev_f = normal_pdf(prev_x, pd.mean, pd.sd);
  for (int i = 1; i < m; ++i) {
    const double x =
        pd.mean + pd.sd * extend_to_sigmas * (2.0 * i / (m - 1.0) - 1.0);
    const double f = normal_pdf(x, pd.mean, pd.sd);
    integral += 0.5 * (f + prev_f) * (x - prev_x);
    prev_x = x;
    prev_f = f;
  }
  return integral;
}

struct ForecastPoint {
  int day;
  double cumulative;
  double daily;
};

struct Forecast {
  std::vector<ForecastPoint> points;
  double inflection_day = std::numeric_limits<double>::quiet_NaN();  // e ("median")
  int peak_day = 0;                                                  // mode of daily curve
};

// Fitted/forecast series on days 1..horizon: cumulative mu(x, beta_hat) plus
// the daily curve as first differences (daily[1] = cumulative[1]).
inline Forecast forecast_curve(const FitResult& fit, int horizon_days) {
  if (horizon_days < 1) fail("domain-error", "horizon must be >= 1 day");
  const CurveParams cp = fit.curve();
  Forecast fc;
  fc.points.reserve(horizon_days);
  double prev = 0.0;
  double best_daily = -std::numeric_limits<double>::infinity();
  for (int day = 1; day <= horizon_days; ++day) {
    const double cum = fit.model.family.eval(static_cast<double>(day), cp);
    const double daily = day == 1 ? cum : cum - prev;
    fc.points.push_back({day, cum, daily});
    // day 1 carries all pre-window mass (including the lower asymptote), so
    // it does not compete for the peak unless it is the whole horizon
    if (daily > best_daily && (day > 1 || horizon_days == 1)) {
      best_daily = daily;
      fc.peak_day = day;
    }
    prev = cum;
  }
  const int e_slot = fit.model.family.param_index("e");
  if (e_slot >= 0) fc.inflection_day = fit.theta.beta[e_slot];
  return fc;
}

}  // namespace robustfit
