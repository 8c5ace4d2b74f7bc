#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include "robustfit/common.hpp"
#include "robustfit/fitting.hpp"
#include "robustfit/rng.hpp"

namespace robustfit {

enum class Regime { Central, Contaminated };

inline const char* regime_name(Regime r) {
  return r == Regime::Central ? "central" : "contaminated";
}

// Tukey-Huber error contamination: (1-eps) N(0, s2) + eps N(shift_sigmas*s, s2).
struct Contamination {
  double epsilon = 0.05;
  double shift_sigmas = 10.0;
};

struct SimScenario {
  MeanFunction family;
  std::vector<double> xs;
  CurveParams true_params;
  double sigma2 = 1.0;
  double gamma = 1.5;
  Contamination contamination;
  double z_design = 0.0;  // 0 = one step past the last design point
  Regime regime = Regime::Central;
  FitOptions fit_options;
  std::string label;
};

struct EstimatorSummary {
  std::string name;
  int n_used = 0;
  double bias = 0.0;
  double sd = 0.0;
  double q1 = 0.0, median = 0.0, q3 = 0.0;
  double whisker_low = 0.0, whisker_high = 0.0;
};

struct SimulationReport {
  Regime regime = Regime::Central;
  int n_reps = 0;
  int excluded = 0;
  double true_mean = 0.0;  // mu(z, beta_true)
  double z_design = 0.0;
  double gamma = 1.5;
  std::uint64_t seed = 0;
  EstimatorSummary mle;
  EstimatorSummary tsallis;
};

namespace detail {

inline double quantile_type7(std::vector<double> sorted, double q) {
  const double h = (sorted.size() - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

inline EstimatorSummary summarize(const std::string& name, const std::vector<double>& vals,
                                  double truth) {
  EstimatorSummary s;
  s.name = name;
  s.n_used = static_cast<int>(vals.size());
  double m = 0.0;
  for (double v : vals) m += v;
  m /= vals.size();
  s.bias = m - truth;
  double ss = 0.0;
  for (double v : vals) ss += sqr(v - m);
  s.sd = std::sqrt(ss / (vals.size() - 1.0));
  std::vector<double> sorted = vals;
  std::sort(sorted.begin(), sorted.end());
  s.q1 = quantile_type7(sorted, 0.25);
  s.median = quantile_type7(sorted, 0.5);
  s.q3 = quantile_type7(sorted, 0.75);
  const double iqr = s.q3 - s.q1;
  s.whisker_low = s.q1;
  s.whisker_high = s.q3;
  for (double v : sorted) {
    if (v >= s.q1 - 1.5 * iqr) {
      s.whisker_low = v;
      break;
    }
  }
  for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
    if (*it <= s.q3 + 1.5 * iqr) {
      s.whisker_high = *it;
      break;
    }
  }
  return s;
}

}  // namespace detail

// Monte Carlo comparison of the MLE- and Tsallis-based point predictors of
// mu(z, beta) under the central or contaminated error model. Replicate i
// draws from stream (seed, i), so results do not depend on scheduling.
inline SimulationReport run_simulation(const SimScenario& scenario, std::uint64_t seed,
                                       int n_reps) {
  if (n_reps < 2) fail("invalid-options", "need at least 2 replications");
  if (scenario.xs.empty()) fail("invalid-options", "scenario has no design points");
  const double z =
      scenario.z_design > 0.0 ? scenario.z_design : scenario.xs.back() + 1.0;
  const double sd = std::sqrt(scenario.sigma2);
  std::vector<double> mu_true(scenario.xs.size());
  for (std::size_t i = 0; i < scenario.xs.size(); ++i)
    mu_true[i] = scenario.family.eval(scenario.xs[i], scenario.true_params);
  const double target = scenario.family.eval(z, scenario.true_params);

  std::vector<double> mle_vals(n_reps, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> tsa_vals(n_reps, std::numeric_limits<double>::quiet_NaN());
  std::vector<char> ok(n_reps, 0);

  FitOptions fopt = scenario.fit_options;
  fopt.throw_on_nonconvergence = true;
  if (!fopt.start) fopt.start = scenario.true_params;

  auto run_block = [&](int lo, int hi) {
    std::vector<double> ys(scenario.xs.size());
    for (int rep = lo; rep < hi; ++rep) {
      Rng rng(derive_stream(seed, static_cast<std::uint64_t>(rep)));
      for (std::size_t i = 0; i < ys.size(); ++i) {
        double eps = sd * rng.normal();
        if (scenario.regime == Regime::Contaminated &&
            rng.uniform() < scenario.contamination.epsilon)
          eps += scenario.contamination.shift_sigmas * sd;
        ys[i] = mu_true[i] + eps;
      }
      try {
        RegressionModel model(scenario.xs, ys, scenario.family, scenario.label);
        const FitResult mle = fit_mle(model, fopt);
        const FitResult tsa = fit_tsallis(model, TsallisConfig{scenario.gamma}, fopt);
        mle_vals[rep] = model.family.eval(z, mle.curve());
        tsa_vals[rep] = model.family.eval(z, tsa.curve());
        ok[rep] = 1;
      } catch (const Error&) {
        ok[rep] = 0;
      }
    }
  };

  const int hw = std::max(1u, std::thread::hardware_concurrency());
  const int blocks = std::min(hw, std::max(1, n_reps / 64));
  if (blocks <= 1) {
    run_block(0, n_reps);
  } else {
    std::vector<std::future<void>> futs;
    const int chunk = (n_reps + blocks - 1) / blocks;
    for (int b = 0; b < blocks; ++b)
      futs.push_back(std::async(std::launch::async, run_block, b * chunk,
                                std::min(n_reps, (b + 1) * chunk)));
    for (auto& f : futs) f.get();
  }

  std::vector<double> mle_used, tsa_used;
  int excluded = 0;
  for (int rep = 0; rep < n_reps; ++rep) {
    if (ok[rep]) {
      mle_used.push_back(mle_vals[rep]);
      tsa_used.push_back(tsa_vals[rep]);
    } else {
      ++excluded;
    }
  }
  if (excluded > 0.01 * n_reps)
    fail("excessive-nonconvergence",
         std::to_string(excluded) + " of " + std::to_string(n_reps) +
             " replicates failed to converge (limit 1%)");

  SimulationReport rep;
  rep.regime = scenario.regime;
  rep.n_reps = n_reps;
  rep.excluded = excluded;
  rep.true_mean = target;
  rep.z_design = z;
  rep.gamma = scenario.gamma;
  rep.seed = seed;
  rep.mle = detail::summarize("mle", mle_used, target);
  rep.tsallis = detail::summarize("tsallis", tsa_used, target);
  return rep;
}

}  // namespace robustfit
