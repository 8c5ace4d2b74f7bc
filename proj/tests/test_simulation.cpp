#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "robustfit/simulation.hpp"

using namespace robustfit;

namespace {

SimScenario location_scenario() {
  SimScenario sc;
  sc.family = make_constant();
  sc.xs.resize(40);
  for (int i = 0; i < 40; ++i) sc.xs[i] = i + 1.0;
  sc.true_params.b = 10.0;  // constant level
  sc.sigma2 = 4.0;
  sc.gamma = 1.5;
  sc.z_design = 41.0;
  return sc;
}

}  // namespace

TEST_CASE("simulation reports are deterministic given the seed", "[simulation]") {
  SimScenario sc = location_scenario();
  sc.regime = Regime::Contaminated;
  const SimulationReport a = run_simulation(sc, 99, 300);
  const SimulationReport b = run_simulation(sc, 99, 300);
  REQUIRE(a.mle.bias == b.mle.bias);
  REQUIRE(a.tsallis.bias == b.tsallis.bias);
  REQUIRE(a.mle.sd == b.mle.sd);
  REQUIRE(a.tsallis.q3 == b.tsallis.q3);
  REQUIRE(a.excluded == b.excluded);

  const SimulationReport c = run_simulation(sc, 100, 300);
  REQUIRE(a.mle.bias != c.mle.bias);
}

TEST_CASE("zero-noise scenario recovers the target mean", "[simulation]") {
  SimScenario sc = location_scenario();
  sc.sigma2 = 1e-12;
  const SimulationReport rep = run_simulation(sc, 5, 20);
  REQUIRE(std::abs(rep.mle.bias) <= 1e-3 * (1.0 + std::abs(rep.true_mean)));
  REQUIRE(std::abs(rep.tsallis.bias) <= 1e-3 * (1.0 + std::abs(rep.true_mean)));
}

TEST_CASE("central model: similar behaviour; contaminated: only Tsallis robust",
          "[simulation][montecarlo]") {
  SimScenario sc = location_scenario();
  sc.regime = Regime::Central;
  const int reps = 2000;
  const SimulationReport central = run_simulation(sc, 7, reps);
  const double se_scale = std::sqrt(sc.sigma2 / sc.xs.size() / reps);
  REQUIRE(std::abs(central.mle.bias - central.tsallis.bias) <= 4.0 * se_scale);

  sc.regime = Regime::Contaminated;
  const SimulationReport contam = run_simulation(sc, 7, reps);
  REQUIRE(std::abs(contam.tsallis.bias) < std::abs(contam.mle.bias));
  // the MLE absorbs the eps * shift drift; Tsallis stays near zero
  const double drift = sc.contamination.epsilon * sc.contamination.shift_sigmas *
                       std::sqrt(sc.sigma2);
  REQUIRE(contam.mle.bias > 0.5 * drift);
  REQUIRE(std::abs(contam.tsallis.bias) < 0.25 * drift);
}

TEST_CASE("efficiency loss under the central model", "[simulation][montecarlo]") {
  SimScenario sc = location_scenario();
  sc.regime = Regime::Central;
  const SimulationReport rep = run_simulation(sc, 11, 5000);
  // sd of the Tsallis predictor >= sd of the MLE predictor (2 MC ses slack)
  const double se_sd = rep.mle.sd / std::sqrt(2.0 * (5000 - 1.0));
  REQUIRE(rep.tsallis.sd >= rep.mle.sd - 2.0 * se_sd);
}

TEST_CASE("boxplot summaries are ordered", "[simulation]") {
  SimScenario sc = location_scenario();
  const SimulationReport rep = run_simulation(sc, 3, 500);
  for (const EstimatorSummary* s : {&rep.mle, &rep.tsallis}) {
    REQUIRE(s->whisker_low <= s->q1);
    REQUIRE(s->q1 <= s->median);
    REQUIRE(s->median <= s->q3);
    REQUIRE(s->q3 <= s->whisker_high);
    REQUIRE(s->n_used == 500);
  }
}
