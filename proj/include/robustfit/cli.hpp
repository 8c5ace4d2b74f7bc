#pragma once

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robustfit/data.hpp"
#include "robustfit/report.hpp"
#include "robustfit/svg.hpp"

namespace robustfit {

namespace detail {

inline std::string path_stem(const std::string& path) {
  const std::size_t dot = path.find_last_of('.');
  const std::size_t slash = path.find_last_of("/\\");
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
  return path.substr(0, dot);
}

inline void emit_error(const std::string& code, const std::string& message) {
  ordered_json err;
  err["error"]["code"] = code;
  err["error"]["message"] = message;
  std::cerr << err.dump() << "\n";
}

}  // namespace detail

struct CliConfig {
  // fit
  std::string input, out = "fit.json", table_out, series = "deceduti", region;
  std::string layout = "auto", transform = "none", model = "log-logistic-5";
  std::string objective = "tsallis", sigma_convention = "variance-power", kind;
  bool cumulative = false, allow_gaps = false, increasing = false;
  double gamma = 1.5, level = 0.95, tol = 1e-8;
  int max_iter = 2000, multistart = 4;
  std::uint64_t seed = 42;  // fixed documented default; never entropy
  // predict / diagnose
  std::string fit_path;
  int horizon = 120, grid_points = 401;
  double z_design = 0.0, half_width = 8.0, x_design = 0.0;
  std::string density_out;
  // simulate / table
  std::string scenario_path;
  int reps = 1000;
  std::vector<std::string> fit_paths;
  std::string plot;  // "svg" or empty
};

namespace detail {

inline SigmaConvention parse_convention(const std::string& s) {
  if (s == "variance-power") return SigmaConvention::VariancePower;
  if (s == "sd-power") return SigmaConvention::SdPower;
  fail("invalid-options", "sigma-convention must be variance-power or sd-power");
}

inline int cmd_fit(const CliConfig& cfg) {
  if (!(cfg.gamma > 1.0) && cfg.objective == "tsallis")
    fail("invalid-gamma", "--gamma must be > 1 for the Tsallis objective");
  if (cfg.objective != "tsallis" && cfg.objective != "mle")
    fail("invalid-options", "--objective must be tsallis or mle");
  const MeanFunction& family = find_family(cfg.model);  // validates the name
  const SigmaConvention conv = parse_convention(cfg.sigma_convention);
  if (cfg.input.empty()) fail("missing-input", "--input is required");

  LoadOptions lopt;
  lopt.series = cfg.series;
  lopt.region = cfg.region;
  lopt.allow_gaps = cfg.allow_gaps;
  if (cfg.kind == "cumulative") lopt.kind_override = SeriesKind::Cumulative;
  else if (cfg.kind == "daily") lopt.kind_override = SeriesKind::Daily;
  else if (!cfg.kind.empty()) fail("invalid-options", "--kind must be cumulative or daily");
  if (cfg.layout == "national") lopt.layout = CsvLayout::National;
  else if (cfg.layout == "regional") lopt.layout = CsvLayout::Regional;
  else if (cfg.layout == "generic") lopt.layout = CsvLayout::Generic;
  else if (cfg.layout != "auto") fail("invalid-options", "unknown --layout " + cfg.layout);

  EpidemicSeries series = load_csv(cfg.input, lopt);
  if (cfg.transform == "cumsum") series = to_cumulative(series);
  else if (cfg.transform == "diff") series = to_daily(series);
  else if (cfg.transform != "none") fail("invalid-options", "unknown --transform");
  if (cfg.cumulative && series.kind == SeriesKind::Daily) series = to_cumulative(series);

  for (const std::string& w : series.warnings) std::cerr << "warning: " << w << "\n";

  RegressionModel model = make_model(series, family);
  FitOptions fopt;
  fopt.gradient_tol = cfg.tol;
  fopt.max_iter = cfg.max_iter;
  fopt.multistart = cfg.multistart;
  fopt.seed = cfg.seed;
  fopt.increasing = cfg.increasing;

  const ObjectiveKind kind =
      cfg.objective == "mle" ? ObjectiveKind::LogScore : ObjectiveKind::Tsallis;
  const FitResult fit = robustfit::fit(model, kind, TsallisConfig{cfg.gamma}, fopt);
  const SandwichMatrices sw = sandwich_for(fit, conv);
  const WaldReport wald = wald_test(fit, fit.theta, cfg.level, conv);

  const ordered_json doc = fit_report_json(fit, wald, sw, cfg.seed);
  write_text_file(cfg.out, doc.dump(2) + "\n");
  if (!cfg.table_out.empty()) write_text_file(cfg.table_out, table_csv({doc}));
  std::cout << "wrote " << cfg.out << " (converged=" << (fit.converged ? "true" : "false")
            << ", objective=" << num(fit.objective) << ")\n";
  return 0;
}

inline int cmd_predict(const CliConfig& cfg) {
  const FitResult fit = load_fit(cfg.fit_path);
  const double z = cfg.z_design > 0.0 ? cfg.z_design : fit.model.xs.back() + 1.0;
  const Forecast fc = forecast_curve(fit, cfg.horizon);
  ordered_json meta = metadata_json("predict", cfg.seed, fit.model.family.name(),
                                    objective_name(fit.kind), fit.gamma,
                                    SigmaConvention::VariancePower);
  meta["fit"] = cfg.fit_path;
  meta["horizon"] = cfg.horizon;
  meta["z_design"] = z;
  write_text_file(cfg.out, forecast_csv(fc, meta));

  const PredictiveDensity pd = estimative_density(fit, z, cfg.grid_points, cfg.half_width);
  if (!cfg.density_out.empty()) {
    std::string csv = "# " + meta.dump() + "\n";
    csv += "z,density\n";
    for (std::size_t i = 0; i < pd.grid.size(); ++i)
      csv += num(pd.grid[i]) + "," + num(pd.density[i]) + "\n";
    write_text_file(cfg.density_out, csv);
  }
  if (cfg.plot == "svg") {
    write_text_file(detail::path_stem(cfg.out) + ".svg",
                    forecast_svg(fit.model.xs, fit.model.ys, fc, fit.model.label));
    write_text_file(detail::path_stem(cfg.out) + "_density.svg",
                    density_svg({pd}, fit.model.label));
  }
  std::cout << "wrote " << cfg.out << " (inflection day " << num(fc.inflection_day)
            << ", peak day " << fc.peak_day << ")\n";
  return 0;
}

inline int cmd_diagnose(const CliConfig& cfg) {
  const FitResult fit = load_fit(cfg.fit_path);
  InfluenceGridOptions gopt;
  gopt.x = cfg.x_design;
  gopt.points = cfg.grid_points;
  gopt.half_width_sigmas = cfg.half_width;
  const std::vector<InfluenceCurve> curves = influence_curves(fit, gopt);
  const TsallisConfig tc{fit.kind == ObjectiveKind::Tsallis ? fit.gamma : 1.5};
  std::vector<double> weights;
  if (fit.kind == ObjectiveKind::Tsallis)
    weights = observation_weights(fit.model, fit, tc);
  else
    weights.assign(fit.model.n(), 1.0);
  const std::vector<double> residuals = fit.model.residuals(fit.curve());

  ordered_json meta = metadata_json("diagnose", cfg.seed, fit.model.family.name(),
                                    objective_name(fit.kind), fit.gamma,
                                    SigmaConvention::VariancePower);
  meta["fit"] = cfg.fit_path;
  meta["x"] = gopt.x > 0.0 ? gopt.x : fit.model.xs.back();
  meta["if_proportional_beta"] =
      "(y-mu)*dmu/dbeta*exp(-(gamma-1)(y-mu)^2/(2 sigma2))";
  meta["if_normalized"] = "K^{-1} s(y; theta)";
  write_text_file(cfg.out, influence_csv(curves, weights, residuals, meta));
  std::cout << "wrote " << cfg.out << "\n";
  return 0;
}

inline int cmd_simulate(const CliConfig& cfg) {
  if (cfg.reps < 2) fail("invalid-options", "--reps must be >= 2");
  ScenarioFile sf = load_scenario(cfg.scenario_path);
  std::vector<SimulationReport> reports;
  ordered_json out;
  out["metadata"] = metadata_json("simulate", cfg.seed, sf.scenario.family.name(),
                                  "tsallis-vs-mle", sf.scenario.gamma,
                                  SigmaConvention::VariancePower);
  out["metadata"]["reps"] = cfg.reps;
  out["metadata"]["scenario"] = cfg.scenario_path;
  out["metadata"]["contamination"] = {{"epsilon", sf.scenario.contamination.epsilon},
                                      {"shift_sigmas", sf.scenario.contamination.shift_sigmas}};
  ordered_json arr = ordered_json::array();
  for (Regime regime : sf.regimes) {
    SimScenario sc = sf.scenario;
    sc.regime = regime;
    const SimulationReport rep = run_simulation(sc, cfg.seed, cfg.reps);
    reports.push_back(rep);
    arr.push_back(simulation_report_json(rep));
  }
  out["reports"] = arr;
  write_text_file(cfg.out, out.dump(2) + "\n");
  if (cfg.plot == "svg")
    write_text_file(detail::path_stem(cfg.out) + ".svg", boxplot_svg(reports));
  std::cout << "wrote " << cfg.out << " (" << reports.size() << " regime(s), " << cfg.reps
            << " reps)\n";
  return 0;
}

inline int cmd_table(const CliConfig& cfg) {
  if (cfg.fit_paths.empty()) fail("missing-input", "table needs at least one --fits entry");
  std::vector<ordered_json> docs;
  for (const std::string& path : cfg.fit_paths) {
    std::ifstream in(path);
    if (!in) fail("missing-input", "cannot open fit file '" + path + "'");
    ordered_json doc;
    in >> doc;
    docs.push_back(doc);
  }
  write_text_file(cfg.out, table_csv(docs));
  std::cout << "wrote " << cfg.out << " (" << docs.size() << " rows)\n";
  return 0;
}

}  // namespace detail

inline int run_cli(std::vector<std::string> args) {
  CLI::App app{"robustfit: robust sigmoid-curve fitting via the Tsallis score"};
  app.require_subcommand(1);
  CliConfig cfg;

  CLI::App* fit = app.add_subcommand("fit", "fit a curve to a CSV time series");
  fit->add_option("--input", cfg.input, "input CSV (dpc national/regional or date,value)");
  fit->add_option("--layout", cfg.layout, "auto|national|regional|generic");
  fit->add_option("--series", cfg.series, "source column (default deceduti)");
  fit->add_option("--region", cfg.region, "region filter for regional layout");
  fit->add_option("--transform", cfg.transform, "none|cumsum|diff");
  fit->add_option("--kind", cfg.kind, "override series kind: cumulative|daily");
  fit->add_flag("--cumulative", cfg.cumulative, "fit the cumulative form of the series");
  fit->add_flag("--allow-gaps", cfg.allow_gaps, "reindex by calendar day across gaps");
  fit->add_option("--model", cfg.model, "curve family (default log-logistic-5)");
  fit->add_option("--objective", cfg.objective, "tsallis|mle (default tsallis)");
  fit->add_option("--gamma", cfg.gamma, "Tsallis robustness exponent, > 1 (default 1.5)");
  fit->add_option("--level", cfg.level, "confidence level (default 0.95)");
  fit->add_option("--tol", cfg.tol, "gradient tolerance (default 1e-8)");
  fit->add_option("--max-iter", cfg.max_iter, "quasi-Newton iteration cap");
  fit->add_option("--multistart", cfg.multistart, "number of jittered starts (default 4)");
  fit->add_flag("--increasing", cfg.increasing, "constrain d >= c");
  fit->add_option("--seed", cfg.seed, "RNG seed (default 42)");
  fit->add_option("--sigma-convention", cfg.sigma_convention, "variance-power|sd-power");
  fit->add_option("--out", cfg.out, "output fit JSON (default fit.json)");
  fit->add_option("--table", cfg.table_out, "also write an e/d summary CSV");

  CLI::App* predict = app.add_subcommand("predict", "fitted/forecast series from a fit");
  predict->add_option("--fit", cfg.fit_path, "fit JSON produced by `fit`")->required();
  predict->add_option("--horizon", cfg.horizon, "forecast horizon in days (default 120)");
  predict->add_option("--z-design", cfg.z_design, "future design point (default last+1)");
  predict->add_option("--grid-points", cfg.grid_points, "density grid points (default 401)");
  predict->add_option("--half-width", cfg.half_width, "density half-width in sigmas");
  predict->add_option("--density", cfg.density_out, "also write the density grid CSV");
  predict->add_option("--plot", cfg.plot, "svg: emit vector figures");
  predict->add_option("--seed", cfg.seed, "RNG seed recorded in metadata");
  predict->add_option("--out", cfg.out, "output CSV (default fit.json -> forecast.csv)");

  CLI::App* diagnose = app.add_subcommand("diagnose", "influence curves and weights");
  diagnose->add_option("--fit", cfg.fit_path, "fit JSON produced by `fit`")->required();
  diagnose->add_option("--x", cfg.x_design, "design point for IF curves (default last day)");
  diagnose->add_option("--grid-points", cfg.grid_points, "y-grid points (default 401)");
  diagnose->add_option("--half-width", cfg.half_width, "grid half-width in sigmas");
  diagnose->add_option("--seed", cfg.seed, "RNG seed recorded in metadata");
  diagnose->add_option("--out", cfg.out, "output CSV");

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo MLE vs Tsallis study");
  simulate->add_option("--scenario", cfg.scenario_path, "scenario JSON")->required();
  simulate->add_option("--seed", cfg.seed, "RNG seed (default 42)");
  simulate->add_option("--reps", cfg.reps, "replications (default 1000)");
  simulate->add_option("--plot", cfg.plot, "svg: emit boxplot figure");
  simulate->add_option("--out", cfg.out, "output report JSON");

  CLI::App* table = app.add_subcommand("table", "combine fits into an e/d summary table");
  table->add_option("--fits", cfg.fit_paths, "fit JSON files")->required();
  table->add_option("--out", cfg.out, "output CSV");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    detail::emit_error("invalid-arguments", e.what());
    return 2;
  }

  try {
    if (fit->parsed()) {
      cfg.out = cfg.out.empty() ? "fit.json" : cfg.out;
      return detail::cmd_fit(cfg);
    }
    if (predict->parsed()) {
      if (cfg.out == "fit.json") cfg.out = "forecast.csv";
      return detail::cmd_predict(cfg);
    }
    if (diagnose->parsed()) {
      if (cfg.out == "fit.json") cfg.out = "if_curves.csv";
      return detail::cmd_diagnose(cfg);
    }
    if (simulate->parsed()) {
      if (cfg.out == "fit.json") cfg.out = "report.json";
      return detail::cmd_simulate(cfg);
    }
    if (table->parsed()) {
      if (cfg.out == "fit.json") cfg.out = "table.csv";
      return detail::cmd_table(cfg);
    }
  } catch (const NonConvergence& e) {
    detail::emit_error(e.code(), e.what());
    return 1;
  } catch (const Error& e) {
    const bool config_error = std::string(e.code()) == "invalid-options" ||
                              e.code() == "invalid-gamma" || e.code() == "unknown-model" ||
                              e.code() == "missing-input";
    detail::emit_error(e.code(), e.what());
    return config_error ? 2 : 1;
  } catch (const std::exception& e) {
    detail::emit_error("internal-error", e.what());
    return 1;
  }
  return 2;
}

inline int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(std::move(args));
}

}  // namespace robustfit
