#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "robustfit/curves.hpp"
#include "robustfit/rng.hpp"

using namespace robustfit;

namespace {

CurveParams params(double b, double c, double d, double e, double f = 1.0) {
  CurveParams p;
  p.b = b; p.c = c; p.d = d; p.e = e; p.f = f;
  return p;
}

}  // namespace

TEST_CASE("log-logistic-5 evaluation", "[curves]") {
  // at x = e with f = 1 the logistic term is 1/2
  REQUIRE_THAT(eval_loglogistic5(30.0, params(-1.7, 0.0, 10.0, 30.0)),
               Catch::Matchers::WithinRel(5.0, 1e-14));
  // b = 0 forces (d-c)/2 regardless of x
  REQUIRE_THAT(eval_loglogistic5(3.0, params(0.0, 0.0, 8.0, 12.0)),
               Catch::Matchers::WithinRel(4.0, 1e-14));
  // direct substitution: x = 2e, b = 1, f = 1 -> 1/(1 + 2) = 1/3
  REQUIRE_THAT(eval_loglogistic5(20.0, params(1.0, 0.0, 1.0, 10.0)),
               Catch::Matchers::WithinRel(1.0 / 3.0, 1e-14));

  REQUIRE_THROWS_AS(eval_loglogistic5(-1.0, params(1, 0, 1, 10)), Error);
  REQUIRE_THROWS_AS(eval_loglogistic5(1.0, params(1, 0, 1, -10)), Error);
}

TEST_CASE("log-logistic-5 gradient", "[curves]") {
  const CurveParams p = params(1.4, 1.0, 20.0, 10.0, 1.0);
  const auto& ll5 = find_family("log-logistic-5");
  const auto g = ll5.grad(10.0, p);  // x = e, f = 1
  REQUIRE_THAT(g[1], Catch::Matchers::WithinRel(0.5, 1e-13));  // d mu / d c
  REQUIRE_THAT(g[2], Catch::Matchers::WithinRel(0.5, 1e-13));  // d mu / d d

  // finite differences at a non-degenerate point
  const CurveParams q = params(1.2, 1.0, 20.0, 10.0, 1.3);
  const auto ga = ll5.grad(7.0, q);
  const std::vector<double> flat = ll5.flatten(q);
  const auto gf = oracles::fd_gradient(
      [&](std::span<const double> beta) {
        return ll5.eval(7.0, ll5.unflatten(beta));
      },
      flat, 1e-5);
  for (int i = 0; i < 5; ++i)
    REQUIRE_THAT(ga[i], Catch::Matchers::WithinRel(gf[i], 1e-6));
}

namespace {

// Extended-precision re-evaluation of each catalog formula, so the
// finite-difference oracle's rounding noise sits far below the tolerances.
long double oracle_eval(const std::string& name, long double x,
                        std::span<const double> beta) {
  const long double b = beta[0];
  const long double c = beta.size() > 1 ? beta[1] : 0.0L;
  const long double d = beta.size() > 2 ? beta[2] : 0.0L;
  const long double e = beta.size() > 3 ? beta[3] : 1.0L;
  const long double f = beta.size() > 4 ? beta[4] : 1.0L;
  if (name == "log-logistic-5")
    return c + (d - c) / std::pow(1.0L + std::exp(b * (std::log(x) - std::log(e))), f);
  if (name == "log-logistic-4" || name == "weibull-1") {
    const long double u = std::exp(b * (std::log(x) - std::log(e)));
    return name == "weibull-1" ? c + (d - c) * std::exp(-u) : c + (d - c) / (1.0L + u);
  }
  if (name == "gompertz") return c + (d - c) * std::exp(-std::exp(b * (x - e)));
  throw std::runtime_error("no oracle for " + name);
}

std::vector<double> oracle_grad(const MeanFunction& fam, double x,
                                std::span<const double> beta) {
  std::vector<double> g(beta.size());
  std::vector<double> work(beta.begin(), beta.end());
  for (std::size_t i = 0; i < beta.size(); ++i) {
    const long double h = 1e-6L * (1.0L + std::abs(beta[i]));
    const double orig = work[i];
    auto central = [&](long double step) {
      work[i] = static_cast<double>(orig + step);
      const long double hi = oracle_eval(fam.name(), x, work);
      work[i] = static_cast<double>(orig - step);
      const long double lo = oracle_eval(fam.name(), x, work);
      work[i] = orig;
      const long double used = (orig + static_cast<double>(step)) -
                               (orig - static_cast<double>(step));
      return (hi - lo) / used;
    };
    const long double d1 = central(h);
    const long double d2 = central(0.5L * h);
    g[i] = static_cast<double>((4.0L * d2 - d1) / 3.0L);
  }
  return g;
}

}  // namespace

TEST_CASE("catalog gradients match finite differences on random draws", "[curves]") {
  for (const char* name : {"log-logistic-5", "log-logistic-4", "weibull-1", "gompertz"}) {
    const MeanFunction& fam = find_family(name);
    Rng rng(20240101);
    int checked = 0;
    for (int t = 0; t < 1000; ++t) {
      CurveParams p;
      p.b = (rng.uniform() < 0.5 ? -1 : 1) * (0.3 + 3.0 * rng.uniform());
      p.c = -5.0 + 10.0 * rng.uniform();
      p.d = p.c + 1.0 + 150.0 * rng.uniform();
      p.e = 0.5 + 60.0 * rng.uniform();
      p.f = 0.3 + 2.5 * rng.uniform();
      const double x = 0.1 + 120.0 * rng.uniform();
      const auto ga = fam.grad(x, p);
      const std::vector<double> flat = fam.flatten(p);
      const auto gf = oracle_grad(fam, x, flat);
      for (int i = 0; i < fam.arity(); ++i)
        REQUIRE(std::abs(ga[i] - gf[i]) <=
                std::max(1e-6 * std::abs(gf[i]), 1e-9));
      ++checked;
    }
    REQUIRE(checked == 1000);
  }
}

TEST_CASE("four-parameter variant equals five-parameter at f=1", "[curves]") {
  const auto& ll4 = find_family("log-logistic-4");
  const auto& ll5 = find_family("log-logistic-5");
  const CurveParams p = params(-2.2, 3.0, 90.0, 25.0, 1.0);
  for (double x : {0.5, 3.0, 25.0, 80.0, 200.0})
    REQUIRE(ll4.eval(x, p) == ll5.eval(x, p));
}

TEST_CASE("monotone and asymptotic behaviour", "[curves]") {
  // b < 0, c < d, f > 0: nondecreasing in x
  const CurveParams p = params(-1.8, 2.0, 50.0, 20.0, 1.4);
  double prev = -1e300;
  for (double x = 0.5; x < 200.0; x *= 1.07) {
    const double v = eval_loglogistic5(x, p);
    REQUIRE(v >= prev - 1e-12);
    prev = v;
  }
  // limits: c as x -> 0+, d as x -> infinity (b < 0)
  const double tol = 1e-6 * std::abs(p.d - p.c);
  REQUIRE_THAT(eval_loglogistic5(p.e * 1e-8, p), Catch::Matchers::WithinAbs(p.c, tol));
  REQUIRE_THAT(eval_loglogistic5(p.e * 1e8, p), Catch::Matchers::WithinAbs(p.d, tol));
  // mirrored for b > 0
  const CurveParams q = params(1.8, 2.0, 50.0, 20.0, 1.4);
  REQUIRE_THAT(eval_loglogistic5(q.e * 1e8, q), Catch::Matchers::WithinAbs(q.c, tol));
  REQUIRE_THAT(eval_loglogistic5(q.e * 1e-8, q), Catch::Matchers::WithinAbs(q.d, tol));
  // weibull-1 shares the log-x limit structure
  const auto& w1 = find_family("weibull-1");
  REQUIRE_THAT(w1.eval(p.e * 1e-8, p), Catch::Matchers::WithinAbs(p.c, tol));
  REQUIRE_THAT(w1.eval(p.e * 1e8, p), Catch::Matchers::WithinAbs(p.d, tol));
}

TEST_CASE("self start on a saturated log-logistic series", "[curves]") {
  const auto& ll5 = find_family("log-logistic-5");
  const CurveParams truth = params(1.0, 0.0, 100.0, 30.0, 1.0);
  std::vector<double> xs, ys;
  for (int x = 1; x <= 600; ++x) {
    xs.push_back(x);
    ys.push_back(ll5.eval(x, truth));
  }
  const CurveParams start = ll5.self_start(xs, ys);
  REQUIRE(start.e >= 25.0);
  REQUIRE(start.e <= 35.0);
  REQUIRE(start.d >= 100.0);
  REQUIRE(start.d <= 110.0);
  REQUIRE(start.f == 1.0);
  REQUIRE(start.b > 0.0);  // decreasing data
}

TEST_CASE("self start edge cases", "[curves]") {
  const auto& ll4 = find_family("log-logistic-4");
  std::vector<double> xs = {1, 2, 3, 4, 5, 6};
  std::vector<double> flat(6, 3.0);
  REQUIRE_THROWS_AS(ll4.self_start(xs, flat), Error);
  REQUIRE_THROWS_AS(ll4.self_start(std::vector<double>{1, 2, 3},
                                   std::vector<double>{1, 2, 3}),
                    Error);

  // strictly increasing cumulative counts: c0 = first, d0 = 1.05 * last
  std::vector<double> cum = {2, 5, 9, 20, 33, 41};
  const CurveParams s = ll4.self_start(xs, cum);
  REQUIRE(s.c == 2.0);
  REQUIRE_THAT(s.d, Catch::Matchers::WithinRel(1.05 * 41.0, 1e-12));
  REQUIRE(s.b < 0.0);  // increasing sigmoid convention
}
