#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "robustfit/inference.hpp"
#include "robustfit/rng.hpp"

using namespace robustfit;

namespace {

// Estimating-function value psi(y; theta) at design point x: the Tsallis
// score gradient divided by alpha(1+alpha), so that E[d psi / d theta] matches
// the stored K. Lives here so the oracle does not share code with the library
// closed forms.
std::vector<double> psi_at(const RegressionModel& model, double x, double y,
                           const Theta& theta, double gamma) {
  const CurveParams cp = model.family.unflatten(theta.beta);
  const double mu = model.family.eval(x, cp);
  const std::vector<double> dmu = model.family.grad(x, cp);
  std::vector<double> s(theta.beta.size() + 1);
  tsallis_point_gradient(y, mu, dmu, theta.sigma2, gamma, s);
  const double scale = tsallis_score_scale(gamma);
  for (double& v : s) v /= scale;
  return s;
}

Matrix k_oracle_gh(const RegressionModel& model, const Theta& theta, double gamma) {
  const std::size_t dim = theta.beta.size() + 1;
  const auto gh = oracles::gauss_hermite(96);
  Matrix k(dim, dim);
  for (std::size_t i = 0; i < model.n(); ++i) {
    const double x = model.xs[i];
    const CurveParams cp = model.family.unflatten(theta.beta);
    const double mu = model.family.eval(x, cp);
    for (std::size_t col = 0; col < dim; ++col) {
      Theta tp = theta, tm = theta;
      const double base = col < theta.beta.size() ? theta.beta[col] : theta.sigma2;
      const double h = 1e-6 * (1.0 + std::abs(base));
      if (col < theta.beta.size()) {
        tp.beta[col] += h;
        tm.beta[col] -= h;
      } else {
        tp.sigma2 += h;
        tm.sigma2 -= h;
      }
      for (std::size_t row = 0; row < dim; ++row) {
        const double expectation = oracles::gh_expectation(gh, mu, theta.sigma2, [&](double y) {
          return (psi_at(model, x, y, tp, gamma)[row] -
                  psi_at(model, x, y, tm, gamma)[row]) /
                 (2.0 * h);
        });
        k(row, col) += expectation / static_cast<double>(model.n());
      }
    }
  }
  return k;
}

struct McMatrix {
  Matrix mean;
  Matrix se;  // Monte Carlo standard error per entry
};

McMatrix j_oracle_mc(const RegressionModel& model, const Theta& theta, double gamma,
                     int draws, std::uint64_t seed) {
  const std::size_t dim = theta.beta.size() + 1;
  const CurveParams cp = model.family.unflatten(theta.beta);
  std::vector<double> mus(model.n());
  std::vector<std::vector<double>> dmus(model.n());
  for (std::size_t i = 0; i < model.n(); ++i) {
    mus[i] = model.family.eval(model.xs[i], cp);
    dmus[i] = model.family.grad(model.xs[i], cp);
  }
  const double sd = std::sqrt(theta.sigma2);
  const double scale = tsallis_score_scale(gamma);
  Rng rng(seed);
  Matrix m1(dim, dim), m2(dim, dim);
  std::vector<double> s(dim);
  for (int t = 0; t < draws; ++t) {
    const std::size_t i = t % model.n();
    const double y = mus[i] + sd * rng.normal();
    tsallis_point_gradient(y, mus[i], dmus[i], theta.sigma2, gamma, s);
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = 0; b < dim; ++b) {
        const double prod = s[a] * s[b] / (scale * scale);
        m1(a, b) += prod / draws;
        m2(a, b) += prod * prod / draws;
      }
  }
  McMatrix out{m1, Matrix(dim, dim)};
  for (std::size_t a = 0; a < dim; ++a)
    for (std::size_t b = 0; b < dim; ++b)
      out.se(a, b) =
          std::sqrt(std::max(0.0, m2(a, b) - m1(a, b) * m1(a, b)) / draws);
  return out;
}

RegressionModel grid_model() {
  const MeanFunction fam = make_loglogistic4();
  CurveParams truth;
  truth.b = -2.0; truth.c = 5.0; truth.d = 100.0; truth.e = 10.0;
  std::vector<double> xs(25), ys(25);
  for (int i = 0; i < 25; ++i) {
    xs[i] = i + 1.0;
    ys[i] = fam.eval(xs[i], truth);  // oracle checks use theta directly
  }
  return RegressionModel(xs, ys, fam);
}

}  // namespace

TEST_CASE("sensitivity matrix block values", "[inference]") {
  // constant mean, n=1, sigma2=1, alpha=1: beta entry is xi_1 = (2pi)^{-1/2} 2^{-3/2}
  RegressionModel m({1.0, 2.0}, {0.0, 0.0}, make_constant());
  Theta th{{0.0}, 1.0};
  const SandwichMatrices sw =
      sandwich_matrices(m, th, ObjectiveKind::Tsallis, 2.0);
  const double xi1 = std::pow(2.0 * kPi, -0.5) * std::pow(2.0, -1.5);
  REQUIRE_THAT(sw.K(0, 0), Catch::Matchers::WithinRel(xi1, 1e-12));
  REQUIRE_THAT(sw.K(0, 0), Catch::Matchers::WithinAbs(0.1410, 5e-4));
  // off-diagonal beta/sigma2 block is exactly zero
  REQUIRE(sw.K(0, 1) == 0.0);
  REQUIRE(sw.K(1, 0) == 0.0);
  REQUIRE(sw.J(0, 1) == 0.0);

  // quadrature oracle agrees
  const Matrix kq = k_oracle_gh(m, th, 2.0);
  REQUIRE_THAT(sw.K(0, 0), Catch::Matchers::WithinRel(kq(0, 0), 1e-7));
  REQUIRE_THAT(sw.K(1, 1), Catch::Matchers::WithinRel(kq(1, 1), 1e-7));
}

TEST_CASE("alpha -> 0 limit restores likelihood theory", "[inference]") {
  const RegressionModel model = grid_model();
  Theta th{{-2.0, 5.0, 100.0, 10.0}, 4.0};
  const SandwichMatrices tsa =
      sandwich_matrices(model, th, ObjectiveKind::Tsallis, 1.0 + 1e-9);
  const SandwichMatrices fisher =
      sandwich_matrices(model, th, ObjectiveKind::LogScore, 1.0);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      REQUIRE_THAT(tsa.K(i, j), Catch::Matchers::WithinAbs(fisher.K(i, j),
                                                           1e-6 * (1 + std::abs(fisher.K(i, j)))));
      REQUIRE_THAT(tsa.J(i, j), Catch::Matchers::WithinAbs(tsa.K(i, j),
                                                           1e-6 * (1 + std::abs(tsa.K(i, j)))));
    }
}

TEST_CASE("J is positive semidefinite at random theta", "[inference]") {
  const RegressionModel model = grid_model();
  Rng rng(2024);
  for (int t = 0; t < 100; ++t) {
    Theta th;
    th.beta = {-3.0 + 2.0 * rng.uniform(), 10.0 * rng.uniform(),
               50.0 + 100.0 * rng.uniform(), 2.0 + 20.0 * rng.uniform()};
    th.sigma2 = 0.2 + 8.0 * rng.uniform();
    const double gamma = 1.05 + 1.95 * rng.uniform();
    const SandwichMatrices sw =
        sandwich_matrices(model, th, ObjectiveKind::Tsallis, gamma);
    const auto eig = sym_eigenvalues(sw.J);
    REQUIRE(eig.front() >= -1e-12 * std::abs(eig.back()));
  }
}

TEST_CASE("sandwich variance closed cases", "[inference]") {
  Matrix k(2, 2), j(2, 2);
  k(0, 0) = 2; k(1, 1) = 2;
  j(0, 0) = 8; j(1, 1) = 2;
  const Matrix v = sandwich_variance(k, j);
  REQUIRE_THAT(v(0, 0), Catch::Matchers::WithinRel(2.0, 1e-12));
  REQUIRE_THAT(v(1, 1), Catch::Matchers::WithinRel(0.5, 1e-12));

  // J = K: V = K^{-1}
  const Matrix v2 = sandwich_variance(k, k);
  REQUIRE_THAT(v2(0, 0), Catch::Matchers::WithinRel(0.5, 1e-12));
}

TEST_CASE("closed-form K and J match quadrature and Monte Carlo oracles",
          "[inference][oracle]") {
  const RegressionModel model = grid_model();
  Theta th{{-2.0, 5.0, 100.0, 10.0}, 1.0};
  int grid_point = 0;
  for (double gamma : {1.1, 1.5, 2.0}) {
    for (double sigma2 : {0.25, 1.0, 4.0}) {
      th.sigma2 = sigma2;
      const SandwichMatrices sw =
          sandwich_matrices(model, th, ObjectiveKind::Tsallis, gamma);
      const Matrix kq = k_oracle_gh(model, th, gamma);
      double kmax = 0.0;
      for (double v : kq.data()) kmax = std::max(kmax, std::abs(v));
      for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
          // entries that are a material part of the matrix get the relative
          // tolerance; structural zeros only need to beat quadrature noise
          const double scale = std::max(std::abs(kq(i, j)), 1e-2 * kmax);
          REQUIRE(std::abs(sw.K(i, j) - kq(i, j)) <= 1e-6 * scale);
        }
      const McMatrix jm = j_oracle_mc(model, th, gamma, 200000,
                                      derive_stream(31337, grid_point));
      for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
          // relative agreement where the entry is real, Monte Carlo noise
          // bound where it is structurally zero
          REQUIRE(std::abs(sw.J(i, j) - jm.mean(i, j)) <=
                  3e-2 * std::abs(jm.mean(i, j)) + 6.0 * jm.se(i, j));
        }
      ++grid_point;
    }
  }
}

TEST_CASE("sd-power reading fails the oracle away from sigma2=1",
          "[inference][oracle]") {
  const RegressionModel model = grid_model();
  Theta th{{-2.0, 5.0, 100.0, 10.0}, 4.0};
  const double gamma = 1.5;
  const Matrix kq = k_oracle_gh(model, th, gamma);
  const SandwichMatrices sd_reading = sandwich_matrices(
      model, th, ObjectiveKind::Tsallis, gamma, SigmaConvention::SdPower);
  REQUIRE(std::abs(sd_reading.K(0, 0) - kq(0, 0)) > 0.05 * std::abs(kq(0, 0)));
}

TEST_CASE("sigma2 entry of J against dense Monte Carlo", "[inference][oracle]") {
  RegressionModel m({1.0, 2.0}, {0.0, 0.0}, make_constant());
  Theta th{{0.0}, 1.0};
  const SandwichMatrices sw = sandwich_matrices(m, th, ObjectiveKind::Tsallis, 2.0);
  const McMatrix jm = j_oracle_mc(m, th, 2.0, 1000000, 999);
  REQUIRE_THAT(sw.J(1, 1), Catch::Matchers::WithinRel(jm.mean(1, 1), 1e-2));
  // the literal (unsquared) xi term would even turn the entry negative
  const double alpha = 1.0;
  const double literal = varsigma_alpha(2.0 * alpha, 1.0) -
                         0.25 * alpha * alpha * xi_alpha(alpha, 1.0);
  REQUIRE(literal < 0.0);
  REQUIRE(sw.J(1, 1) > 0.0);
}

TEST_CASE("V is invariant under observation reordering", "[inference]") {
  const RegressionModel model = grid_model();
  Theta th{{-2.0, 5.0, 100.0, 10.0}, 2.0};
  std::vector<double> xs = model.xs, ys = model.ys;
  std::reverse(xs.begin(), xs.end());
  std::reverse(ys.begin(), ys.end());
  const RegressionModel rev(xs, ys, model.family);
  const SandwichMatrices a = sandwich_matrices(model, th, ObjectiveKind::Tsallis, 1.5);
  const SandwichMatrices b = sandwich_matrices(rev, th, ObjectiveKind::Tsallis, 1.5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      REQUIRE_THAT(a.V(i, j), Catch::Matchers::WithinAbs(b.V(i, j),
                                                         1e-10 * (1 + std::abs(a.V(i, j)))));
}

TEST_CASE("V approaches the inverse Fisher information as gamma -> 1",
          "[inference]") {
  const RegressionModel model = grid_model();
  Theta th{{-2.0, 5.0, 100.0, 10.0}, 2.0};
  const SandwichMatrices near =
      sandwich_matrices(model, th, ObjectiveKind::Tsallis, 1.01);
  const SandwichMatrices fisher =
      sandwich_matrices(model, th, ObjectiveKind::LogScore, 1.0);
  const Matrix finv = inverse_spd(fisher.K, "singular-k", "Fisher");
  for (std::size_t i = 0; i < 5; ++i)
    REQUIRE_THAT(near.V(i, i), Catch::Matchers::WithinRel(finv(i, i), 1e-2));
}

namespace {

FitResult quick_fit(std::uint64_t seed, ObjectiveKind kind, double gamma = 1.5) {
  const MeanFunction fam = make_loglogistic4();
  CurveParams truth;
  truth.b = -2.0; truth.c = 5.0; truth.d = 100.0; truth.e = 20.0;
  std::vector<double> xs(60), ys(60);
  Rng rng(seed);
  for (int i = 0; i < 60; ++i) {
    xs[i] = i + 1.0;
    ys[i] = fam.eval(xs[i], truth) + 3.0 * rng.normal();
  }
  RegressionModel model(xs, ys, fam);
  FitOptions opt;
  opt.start = truth;
  return fit(model, kind, TsallisConfig{gamma}, opt);
}

}  // namespace

TEST_CASE("wald test basics", "[inference]") {
  const FitResult f = quick_fit(101, ObjectiveKind::Tsallis);
  const WaldReport at_opt = wald_test(f, f.theta);
  REQUIRE_THAT(at_opt.statistic, Catch::Matchers::WithinAbs(0.0, 1e-9));
  REQUIRE_THAT(at_opt.p_value, Catch::Matchers::WithinAbs(1.0, 1e-12));
  REQUIRE(at_opt.dof == 5);

  // intervals contain the point estimate; sigma2 interval contains its
  // bias-corrected center
  for (const ParameterInference& pi : at_opt.parameters) {
    if (pi.name == "sigma2") {
      REQUIRE(pi.lower <= pi.bias_corrected);
      REQUIRE(pi.bias_corrected <= pi.upper);
      REQUIRE(pi.bias_corrected > pi.estimate);  // correction inflates
    } else {
      REQUIRE(pi.lower <= pi.estimate);
      REQUIRE(pi.estimate <= pi.upper);
    }
    REQUIRE(pi.se > 0.0);
  }

  // univariate slice: statistic equals the squared z-score
  Theta null_theta = f.theta;
  null_theta.beta[2] += 2.0;
  const SandwichMatrices sw = sandwich_for(f);
  const WaldReport w = wald_test(f, null_theta);
  // build the 1-d z score by hand from the d-coordinate alone
  FitOptions slice_opt;
  slice_opt.start = f.curve();
  slice_opt.fixed_beta = {0, 1, 3};
  slice_opt.fixed_sigma2 = f.theta.sigma2;
  FitResult slice = f;
  slice.fixed_beta = slice_opt.fixed_beta;
  slice.fixed_sigma2 = slice_opt.fixed_sigma2;
  const WaldReport w1 = wald_test(slice, null_theta);
  const double se_d = w1.parameters[0].se;
  REQUIRE_THAT(w1.statistic,
               Catch::Matchers::WithinRel(sqr(2.0 / se_d), 1e-9));
  REQUIRE(w.statistic > 0.0);
}

TEST_CASE("wald statistic is invariant under linear reparameterization",
          "[inference]") {
  const FitResult f = quick_fit(202, ObjectiveKind::Tsallis);
  const SandwichMatrices sw = sandwich_for(f);
  Rng rng(4321);
  Matrix a(5, 5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) a(i, j) = rng.normal() + (i == j ? 3.0 : 0.0);
  std::vector<double> delta = {0.1, -0.4, 2.0, 0.3, 0.5};
  const double n = static_cast<double>(f.model.n());
  const double w_native = n * quad_form(delta, inverse_spd(sw.V, "singular-v", "V"));
  const std::vector<double> adelta = a.mul(delta);
  const Matrix av = a * sw.V * a.transposed();
  const double w_mapped = n * quad_form(adelta, inverse_spd(av, "singular-v", "AVA^T"));
  REQUIRE_THAT(w_mapped, Catch::Matchers::WithinRel(w_native, 1e-8));
}

TEST_CASE("score ratio statistic and weights", "[inference]") {
  const FitResult f = quick_fit(303, ObjectiveKind::Tsallis);
  const TsallisConfig cfg{1.5};
  const RatioReport at_opt = score_ratio_test(f.model, f, f.theta, cfg);
  REQUIRE_THAT(at_opt.statistic, Catch::Matchers::WithinAbs(0.0, 1e-9));
  REQUIRE(at_opt.dof == 5);
  REQUIRE(at_opt.p_value > 0.99);

  // likelihood case: J = K so all weights are 1 and the mixture is chi-square
  const FitResult m = quick_fit(303, ObjectiveKind::LogScore);
  Theta null_theta = m.theta;
  null_theta.beta[2] += 1.0;
  const RatioReport lr = score_ratio_test(m.model, m, null_theta, cfg);
  for (double w : lr.weights) REQUIRE_THAT(w, Catch::Matchers::WithinRel(1.0, 1e-9));
  REQUIRE_THAT(lr.p_value,
               Catch::Matchers::WithinAbs(
                   chi_square_upper_tail(lr.statistic, lr.dof), 0.01));
}

TEST_CASE("adjusted ratio statistic", "[inference]") {
  const TsallisConfig cfg{1.5};
  // J = K: the rescaling factor is exactly 1
  const FitResult m = quick_fit(404, ObjectiveKind::LogScore);
  Theta null_theta = m.theta;
  null_theta.beta[3] += 0.5;
  const AdjustedRatioReport adj = adjusted_score_ratio(m.model, m, null_theta, cfg);
  REQUIRE_THAT(adj.rescale_factor, Catch::Matchers::WithinRel(1.0, 1e-9));
  REQUIRE_THAT(adj.statistic, Catch::Matchers::WithinRel(adj.unadjusted, 1e-9));

  // undefined at the optimum where the score vanishes
  const FitResult f = quick_fit(404, ObjectiveKind::Tsallis);
  REQUIRE_THROWS_AS(adjusted_score_ratio(f.model, f, f.theta, cfg), Error);
}

TEST_CASE("mixture p-value agrees with the chi-square tail", "[inference]") {
  const std::vector<double> unit = {1.0};
  for (double x : {0.5, 1.96 * 1.96, 6.0})
    REQUIRE_THAT(mixture_pvalue(unit, x, 200000, 7),
                 Catch::Matchers::WithinAbs(chi_square_upper_tail(x, 1.0), 5e-3));
}
