#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "robustfit/common.hpp"
#include "robustfit/curves.hpp"

namespace robustfit {

// Dataset plus mean-function family. Observation order carries no meaning for
// the estimators; the data pipeline guarantees chronological order separately.
struct RegressionModel {
  std::vector<double> xs;
  std::vector<double> ys;
  MeanFunction family;
  std::string label;  // e.g. series/region identifier, carried into reports

  RegressionModel() = default;
  RegressionModel(std::vector<double> xs_in, std::vector<double> ys_in, MeanFunction fam,
                  std::string lbl = "")
      : xs(std::move(xs_in)), ys(std::move(ys_in)), family(std::move(fam)),
        label(std::move(lbl)) {
    if (xs.size() != ys.size()) fail("invalid-model", "x/y length mismatch");
    const std::size_t need = static_cast<std::size_t>(family.arity()) + 1;
    if (xs.size() < need)
      fail("invalid-model", "need at least p+1 = " + std::to_string(need) + " observations");
    for (double x : xs) {
      if (!(x > 0.0) || !std::isfinite(x))
        fail("invalid-model", "design points must be positive and finite");
    }
    for (double y : ys) {
      if (!std::isfinite(y)) fail("invalid-model", "responses must be finite");
    }
  }

  std::size_t n() const { return xs.size(); }

  std::vector<double> mean_values(const CurveParams& p) const {
    std::vector<double> mu(n());
    for (std::size_t i = 0; i < n(); ++i) mu[i] = family.eval(xs[i], p);
    return mu;
  }

  std::vector<double> residuals(const CurveParams& p) const {
    std::vector<double> r(n());
    for (std::size_t i = 0; i < n(); ++i) r[i] = ys[i] - family.eval(xs[i], p);
    return r;
  }

  double rss(const CurveParams& p) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n(); ++i) s += sqr(ys[i] - family.eval(xs[i], p));
    return s;
  }
};

}  // namespace robustfit
