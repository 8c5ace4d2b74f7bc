#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "robustfit/common.hpp"
#include "robustfit/linalg.hpp"

namespace robustfit {

struct OptimResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  double grad_inf_norm = std::numeric_limits<double>::quiet_NaN();
};

// Derivative-free simplex minimizer (Nelder-Mead, standard coefficients).
// Used as a warm-up: robust objectives have flat far-field regions where
// gradient methods stall.
inline OptimResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                               std::span<const double> x0, std::span<const double> steps,
                               int max_iter, double ftol_rel = 1e-12) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> pts(n + 1, std::vector<double>(x0.begin(), x0.end()));
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += steps[i];
  for (std::size_t i = 0; i <= n; ++i) fv[i] = f(pts[i]);

  auto order = [&] {
    std::vector<std::size_t> idx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> p2;
    std::vector<double> f2;
    for (std::size_t i : idx) {
      p2.push_back(pts[i]);
      f2.push_back(fv[i]);
    }
    pts.swap(p2);
    fv.swap(f2);
  };

  OptimResult res;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    order();
    const double spread = std::abs(fv[n] - fv[0]);
    if (spread <= ftol_rel * (1.0 + std::abs(fv[0]))) {
      res.converged = true;
      break;
    }
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j] / static_cast<double>(n);

    auto along = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j) p[j] = centroid[j] + t * (pts[n][j] - centroid[j]);
      return p;
    };

    const std::vector<double> xr = along(-1.0);
    const double fr = f(xr);
    if (fr < fv[0]) {
      const std::vector<double> xe = along(-2.0);
      const double fe = f(xe);
      if (fe < fr) {
        pts[n] = xe;
        fv[n] = fe;
      } else {
        pts[n] = xr;
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      pts[n] = xr;
      fv[n] = fr;
    } else {
      const bool outside = fr < fv[n];
      const std::vector<double> xc = along(outside ? -0.5 : 0.5);
      const double fc = f(xc);
      if (fc < std::min(fr, fv[n])) {
        pts[n] = xc;
        fv[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j)
            pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
          fv[i] = f(pts[i]);
        }
      }
    }
  }
  order();
  res.x = pts[0];
  res.value = fv[0];
  res.iterations = iter;
  return res;
}

// BFGS with backtracking Armijo line search on the inverse-Hessian form.
inline OptimResult bfgs(const std::function<double(std::span<const double>)>& f,
                        const std::function<void(std::span<const double>, std::span<double>)>& df,
                        std::span<const double> x0, int max_iter, double gtol_rel = 1e-8) {
  const std::size_t n = x0.size();
  std::vector<double> x(x0.begin(), x0.end());
  double fx = f(x);
  std::vector<double> g(n);
  df(x, g);
  Matrix h = Matrix::identity(n);
  OptimResult res;

  std::vector<double> dir(n), xnew(n), gnew(n), s(n), ygrad(n);
  int iter = 0;
  bool first_update = true;
  int stalled_steps = 0;
  const auto near_machine_floor = [&](double grad_norm, double fval) {
    return grad_norm <= 1e3 * gtol_rel * (1.0 + std::abs(fval));
  };
  for (; iter < max_iter; ++iter) {
    if (inf_norm(g) <= gtol_rel * (1.0 + std::abs(fx))) {
      res.converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      dir[i] = 0.0;
      for (std::size_t j = 0; j < n; ++j) dir[i] -= h(i, j) * g[j];
    }
    double slope = dot(dir, g);
    if (!(slope < 0.0) || !std::isfinite(slope)) {
      h = Matrix::identity(n);
      for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
      slope = dot(dir, g);
      first_update = true;
    }
    // Armijo backtracking; requires strict progress so that steps that
    // underflow the objective resolution register as a stall
    double t = 1.0;
    double fnew = std::numeric_limits<double>::infinity();
    bool found = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) xnew[i] = x[i] + t * dir[i];
      fnew = f(xnew);
      if (std::isfinite(fnew) && fnew < fx && fnew <= fx + 1e-4 * t * slope) {
        found = true;
        break;
      }
      t *= 0.5;
    }
    if (!found) {
      // no resolvable decrease at any scale of the descent direction: the
      // objective is flat to machine precision here, which is as converged
      // as the arithmetic allows
      res.converged = true;
      break;
    }
    if (fx - fnew <= 1e-14 * (1.0 + std::abs(fx)))
      ++stalled_steps;
    else
      stalled_steps = 0;
    df(xnew, gnew);
    double sy = 0.0, ss = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xnew[i] - x[i];
      ygrad[i] = gnew[i] - g[i];
      sy += s[i] * ygrad[i];
      ss += s[i] * s[i];
      yy += ygrad[i] * ygrad[i];
    }
    if (sy > 1e-12 * std::sqrt(ss * yy)) {
      if (first_update) {
        h = Matrix::identity(n).scaled(sy / yy);
        first_update = false;
      }
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      const double rho = 1.0 / sy;
      std::vector<double> hy(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) hy[i] += h(i, j) * ygrad[j];
      const double yhy = dot(ygrad, hy);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          h(i, j) += -rho * (s[i] * hy[j] + hy[i] * s[j]) + rho * rho * yhy * s[i] * s[j] +
                     rho * s[i] * s[j];
    }
    x = xnew;
    fx = fnew;
    g = gnew;
    if (stalled_steps >= 3) {
      res.converged = near_machine_floor(inf_norm(g), fx);
      break;
    }
  }
  res.x = x;
  res.value = fx;
  res.iterations = iter;
  res.grad_inf_norm = inf_norm(g);
  if (!res.converged && iter >= max_iter)
    res.converged = near_machine_floor(inf_norm(g), fx);
  return res;
}

}  // namespace robustfit
