#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "robustfit/common.hpp"
#include "robustfit/optimize.hpp"
#include "robustfit/rng.hpp"
#include "robustfit/scoring.hpp"

namespace robustfit {

enum class ObjectiveKind { LogScore, Tsallis };

inline const char* objective_name(ObjectiveKind k) {
  return k == ObjectiveKind::LogScore ? "mle" : "tsallis";
}

struct FitOptions {
  double gradient_tol = 1e-8;   // relative, on the internal-scale gradient
  int max_iter = 2000;          // quasi-Newton cap
  int simplex_iter = 600;       // derivative-free warm-up cap
  int multistart = 1;
  double start_jitter = 0.2;    // +-20% perturbation of non-primary starts
  std::uint64_t seed = 42;      // start-perturbation stream
  std::optional<CurveParams> start;       // explicit start; default self_start
  std::vector<int> fixed_beta;            // beta slots held at start values
  std::optional<double> fixed_sigma2;
  bool increasing = false;      // keep d >= c via d = c + exp(delta)
  bool throw_on_nonconvergence = true;
};

struct TracePoint {
  int evaluations;
  double best_objective;
};

struct FitResult {
  ObjectiveKind kind = ObjectiveKind::Tsallis;
  double gamma = 1.5;  // 1.0 for the log-score
  Theta theta;
  double objective = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int iterations = 0;
  double gradient_norm = std::numeric_limits<double>::quiet_NaN();  // internal scale
  std::vector<TracePoint> trace;
  int starts_used = 1;
  RegressionModel model;
  std::vector<int> fixed_beta;
  std::optional<double> fixed_sigma2;

  CurveParams curve() const { return model.family.unflatten(theta.beta); }
  int free_dim() const {
    return model.family.arity() - static_cast<int>(fixed_beta.size()) +
           (fixed_sigma2 ? 0 : 1);
  }
  TsallisConfig tsallis_config() const { return TsallisConfig{gamma}; }
};

class NonConvergence : public Error {
public:
  NonConvergence(FitResult partial, const std::string& msg)
      : Error("non-convergence", msg), result(std::move(partial)) {}
  FitResult result;
};

namespace detail {

enum class Transform { Identity, Log, LogGap };

// Maps the free coordinates of theta onto an unconstrained internal vector z.
// Positive parameters (e, f, sigma2) travel on the log scale; with the
// `increasing` option, d travels as log(d - c).
struct ParameterMap {
  struct Entry {
    int theta_index;  // 0..p-1 beta slot, p = sigma2
    Transform transform;
  };
  std::vector<Entry> entries;
  int arity = 0;
  std::vector<double> fixed_full;  // full natural theta with fixed values baked in
  int gap_c_slot = -1;             // natural index of c when LogGap is active

  std::vector<double> pack(std::span<const double> full) const {
    std::vector<double> z(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& en = entries[k];
      const double v = full[en.theta_index];
      switch (en.transform) {
        case Transform::Identity: z[k] = v; break;
        case Transform::Log: z[k] = std::log(std::max(v, 1e-300)); break;
        case Transform::LogGap:
          z[k] = std::log(std::max(v - full[gap_c_slot], 1e-300));
          break;
      }
    }
    return z;
  }

  std::vector<double> unpack(std::span<const double> z) const {
    std::vector<double> full = fixed_full;
    int gap_entry = -1;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& en = entries[k];
      switch (en.transform) {
        case Transform::Identity: full[en.theta_index] = z[k]; break;
        case Transform::Log:
          full[en.theta_index] = std::exp(std::clamp(z[k], -700.0, 700.0));
          break;
        case Transform::LogGap: gap_entry = static_cast<int>(k); break;
      }
    }
    if (gap_entry >= 0) {
      const double gap = std::exp(std::clamp(z[gap_entry], -700.0, 700.0));
      full[entries[gap_entry].theta_index] = full[gap_c_slot] + gap;
    }
    return full;
  }

  // natural-gradient -> internal-gradient chain rule
  std::vector<double> chain(std::span<const double> natural_grad,
                            std::span<const double> full) const {
    std::vector<double> g(entries.size());
    int gap_theta = -1;
    for (std::size_t k = 0; k < entries.size(); ++k)
      if (entries[k].transform == Transform::LogGap) gap_theta = entries[k].theta_index;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& en = entries[k];
      switch (en.transform) {
        case Transform::Identity:
          g[k] = natural_grad[en.theta_index];
          if (gap_theta >= 0 && en.theta_index == gap_c_slot)
            g[k] += natural_grad[gap_theta];  // d = c + exp(delta) rides on c
          break;
        case Transform::Log:
          g[k] = natural_grad[en.theta_index] * full[en.theta_index];
          break;
        case Transform::LogGap:
          g[k] = natural_grad[en.theta_index] * (full[en.theta_index] - full[gap_c_slot]);
          break;
      }
    }
    return g;
  }
};

inline ParameterMap build_parameter_map(const MeanFunction& family, const FitOptions& opt,
                                        std::span<const double> start_full) {
  ParameterMap map;
  map.arity = family.arity();
  map.fixed_full.assign(start_full.begin(), start_full.end());
  const int d_slot = family.param_index("d");
  const int c_slot = family.param_index("c");
  const bool gap = opt.increasing && d_slot >= 0 && c_slot >= 0;
  if (gap) map.gap_c_slot = c_slot;
  for (int i = 0; i < family.arity(); ++i) {
    if (std::find(opt.fixed_beta.begin(), opt.fixed_beta.end(), i) != opt.fixed_beta.end())
      continue;
    Transform t = family.params()[i].positive ? Transform::Log : Transform::Identity;
    if (gap && i == d_slot) t = Transform::LogGap;
    map.entries.push_back({i, t});
  }
  if (!opt.fixed_sigma2) map.entries.push_back({family.arity(), Transform::Log});
  return map;
}

struct StartCandidate {
  OptimResult opt;
  std::vector<TracePoint> trace;
  int nm_iterations = 0;
};

}  // namespace detail

inline FitResult fit(const RegressionModel& model, ObjectiveKind kind,
                     const TsallisConfig& cfg = {}, const FitOptions& options = {}) {
  if (kind == ObjectiveKind::Tsallis) cfg.validate();
  for (int idx : options.fixed_beta)
    if (idx < 0 || idx >= model.family.arity())
      fail("invalid-options", "fixed_beta index out of range");

  CurveParams p0 = options.start ? *options.start : model.family.self_start(model.xs, model.ys);
  if (options.increasing && p0.d < p0.c) p0.d = p0.c + 1e-3 * (std::abs(p0.c) + 1.0);
  std::vector<double> start_full = model.family.flatten(p0);
  const double rss0 = model.rss(p0);
  const double v0 = options.fixed_sigma2
                        ? *options.fixed_sigma2
                        : std::max(rss0 / static_cast<double>(model.n()), 1e-300);
  start_full.push_back(v0);

  const detail::ParameterMap map = detail::build_parameter_map(model.family, options, start_full);
  if (map.entries.empty()) fail("invalid-options", "no free parameters to fit");
  const std::vector<double> z0 = map.pack(start_full);

  auto objective_at = [&, kind](std::span<const double> full) -> double {
    Theta th;
    th.beta.assign(full.begin(), full.end() - 1);
    th.sigma2 = full.back();
    double val;
    try {
      val = kind == ObjectiveKind::LogScore ? log_score_total(model, th)
                                            : tsallis_score_total(model, th, cfg);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
    return std::isfinite(val) ? val : std::numeric_limits<double>::infinity();
  };
  auto gradient_at = [&, kind](std::span<const double> full) -> std::vector<double> {
    Theta th;
    th.beta.assign(full.begin(), full.end() - 1);
    th.sigma2 = full.back();
    return kind == ObjectiveKind::LogScore ? log_score_gradient(model, th)
                                           : tsallis_score_gradient(model, th, cfg);
  };

  auto run_start = [&](int start_index) -> detail::StartCandidate {
    std::vector<double> z = z0;
    if (start_index > 0) {
      Rng rng(derive_stream(options.seed, static_cast<std::uint64_t>(start_index)));
      for (double& zi : z)
        zi += options.start_jitter * (2.0 * rng.uniform() - 1.0) * (1.0 + std::abs(zi));
    }
    detail::StartCandidate cand;
    int evals = 0;
    double best_seen = std::numeric_limits<double>::infinity();
    auto fz = [&](std::span<const double> zv) {
      const double val = objective_at(map.unpack(zv));
      ++evals;
      if (val < best_seen) best_seen = val;
      if (evals % 25 == 0) cand.trace.push_back({evals, best_seen});
      return val;
    };
    auto gz = [&](std::span<const double> zv, std::span<double> out) {
      const std::vector<double> full = map.unpack(zv);
      const std::vector<double> natural = gradient_at(full);
      const std::vector<double> chained = map.chain(natural, full);
      std::copy(chained.begin(), chained.end(), out.begin());
    };

    std::vector<double> steps(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
      const bool log_scale = map.entries[k].transform != detail::Transform::Identity;
      steps[k] = log_scale ? 0.15 : 0.05 * (1.0 + std::abs(z[k]));
    }
    const OptimResult warm = nelder_mead(fz, z, steps, options.simplex_iter);
    cand.nm_iterations = warm.iterations;
    cand.opt = bfgs(fz, gz, warm.x, options.max_iter, options.gradient_tol);
    cand.trace.push_back({evals, cand.opt.value});
    return cand;
  };

  std::vector<detail::StartCandidate> candidates;
  if (options.multistart <= 1) {
    candidates.push_back(run_start(0));
  } else {
    std::vector<std::future<detail::StartCandidate>> futs;
    for (int k = 0; k < options.multistart; ++k)
      futs.push_back(std::async(std::launch::async, run_start, k));
    for (auto& f : futs) candidates.push_back(f.get());
  }

  // lowest objective wins; ties within 1e-10 go to the smallest ||beta||
  int best = 0;
  auto beta_norm = [&](const detail::StartCandidate& c) {
    const std::vector<double> full = map.unpack(c.opt.x);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < full.size(); ++i) s += full[i] * full[i];
    return std::sqrt(s);
  };
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    const double dv = candidates[k].opt.value - candidates[best].opt.value;
    if (dv < -1e-10) {
      best = static_cast<int>(k);
    } else if (std::abs(dv) <= 1e-10 && beta_norm(candidates[k]) < beta_norm(candidates[best])) {
      best = static_cast<int>(k);
    }
  }
  const detail::StartCandidate& winner = candidates[best];

  const std::vector<double> full = map.unpack(winner.opt.x);
  FitResult result;
  result.kind = kind;
  result.gamma = kind == ObjectiveKind::LogScore ? 1.0 : cfg.gamma;
  result.theta.beta.assign(full.begin(), full.end() - 1);
  result.theta.sigma2 = full.back();
  result.objective = winner.opt.value;
  result.converged = winner.opt.converged;
  result.iterations = winner.nm_iterations + winner.opt.iterations;
  result.gradient_norm = winner.opt.grad_inf_norm;
  result.trace = winner.trace;
  result.starts_used = static_cast<int>(candidates.size());
  result.model = model;
  result.fixed_beta = options.fixed_beta;
  result.fixed_sigma2 = options.fixed_sigma2;

  if (!result.converged && options.throw_on_nonconvergence) {
    throw NonConvergence(result, "fit did not reach gradient tolerance " +
                                     std::to_string(options.gradient_tol) + " within " +
                                     std::to_string(options.max_iter) + " iterations");
  }
  return result;
}

inline FitResult fit_mle(const RegressionModel& model, const FitOptions& options = {}) {
  return fit(model, ObjectiveKind::LogScore, {}, options);
}

inline FitResult fit_tsallis(const RegressionModel& model, const TsallisConfig& cfg,
                             const FitOptions& options = {}) {
  return fit(model, ObjectiveKind::Tsallis, cfg, options);
}

}  // namespace robustfit
