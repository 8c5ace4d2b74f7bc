#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "robustfit/data.hpp"
#include "robustfit/diagnostics.hpp"
#include "robustfit/inference.hpp"
#include "robustfit/prediction.hpp"
#include "robustfit/simulation.hpp"

namespace robustfit {

using ordered_json = nlohmann::ordered_json;

// Shortest round-trip double formatting, reused for CSV cells so JSON and CSV
// artifacts agree digit-for-digit.
inline std::string num(double x) { return ordered_json(x).dump(); }

inline ordered_json metadata_json(const std::string& subcommand, std::uint64_t seed,
                                  const std::string& model, const std::string& objective,
                                  double gamma, SigmaConvention conv) {
  ordered_json m;
  m["tool"] = "robustfit";
  m["version"] = kVersion;
  m["subcommand"] = subcommand;
  m["seed"] = seed;
  m["model"] = model;
  m["objective"] = objective;
  m["gamma"] = gamma;
  m["sigma_convention"] = sigma_convention_name(conv);
  return m;
}

inline ordered_json matrix_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline ordered_json theta_json(const FitResult& fit) {
  ordered_json t;
  const auto& params = fit.model.family.params();
  for (int i = 0; i < fit.model.family.arity(); ++i) t[params[i].name] = fit.theta.beta[i];
  t["sigma2"] = fit.theta.sigma2;
  return t;
}

inline ordered_json fit_report_json(const FitResult& fit, const WaldReport& wald,
                                    const SandwichMatrices& sw, std::uint64_t seed) {
  ordered_json doc;
  doc["metadata"] = metadata_json("fit", seed, fit.model.family.name(),
                                  objective_name(fit.kind), fit.gamma, sw.convention);
  doc["metadata"]["level"] = wald.level;

  ordered_json data;
  data["label"] = fit.model.label;
  data["n"] = fit.model.n();
  data["x"] = fit.model.xs;
  data["y"] = fit.model.ys;
  doc["data"] = data;

  ordered_json f;
  f["converged"] = fit.converged;
  f["iterations"] = fit.iterations;
  f["gradient_norm"] = fit.gradient_norm;
  f["objective"] = fit.objective;
  f["starts_used"] = fit.starts_used;
  f["fixed_beta"] = fit.fixed_beta;
  if (fit.fixed_sigma2)
    f["fixed_sigma2"] = *fit.fixed_sigma2;
  else
    f["fixed_sigma2"] = nullptr;
  f["theta"] = theta_json(fit);
  ordered_json trace = ordered_json::array();
  for (const TracePoint& tp : fit.trace)
    trace.push_back(ordered_json::array({tp.evaluations, tp.best_objective}));
  f["trace"] = trace;
  doc["fit"] = f;

  ordered_json inf;
  ordered_json params = ordered_json::array();
  for (const ParameterInference& pi : wald.parameters) {
    ordered_json p;
    p["name"] = pi.name;
    p["estimate"] = pi.estimate;
    p["se"] = pi.se;
    p["lower"] = pi.lower;
    p["upper"] = pi.upper;
    if (std::isfinite(pi.bias_corrected)) p["bias_corrected"] = pi.bias_corrected;
    params.push_back(p);
  }
  inf["parameters"] = params;
  inf["labels"] = sw.labels;
  inf["K"] = matrix_json(sw.K);
  inf["J"] = matrix_json(sw.J);
  inf["V"] = matrix_json(sw.V);
  inf["godambe"] = matrix_json(sw.G);
  inf["score_scale"] = sw.score_scale;
  inf["covariance_of_theta"] = "V/n";
  doc["inference"] = inf;
  return doc;
}

inline FitResult fit_from_json(const ordered_json& doc) {
  const auto& data = doc.at("data");
  const auto& f = doc.at("fit");
  const auto& meta = doc.at("metadata");
  const MeanFunction& family = find_family(meta.at("model").get<std::string>());
  RegressionModel model(data.at("x").get<std::vector<double>>(),
                        data.at("y").get<std::vector<double>>(), family,
                        data.at("label").get<std::string>());
  FitResult fit;
  fit.kind = meta.at("objective").get<std::string>() == "mle" ? ObjectiveKind::LogScore
                                                              : ObjectiveKind::Tsallis;
  fit.gamma = meta.at("gamma").get<double>();
  fit.model = std::move(model);
  const auto& theta = f.at("theta");
  fit.theta.beta.resize(family.arity());
  for (int i = 0; i < family.arity(); ++i)
    fit.theta.beta[i] = theta.at(family.params()[i].name).get<double>();
  fit.theta.sigma2 = theta.at("sigma2").get<double>();
  fit.objective = f.at("objective").get<double>();
  fit.converged = f.at("converged").get<bool>();
  fit.iterations = f.at("iterations").get<int>();
  fit.gradient_norm = f.at("gradient_norm").get<double>();
  fit.starts_used = f.at("starts_used").get<int>();
  fit.fixed_beta = f.at("fixed_beta").get<std::vector<int>>();
  if (!f.at("fixed_sigma2").is_null()) fit.fixed_sigma2 = f.at("fixed_sigma2").get<double>();
  return fit;
}

inline FitResult load_fit(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("missing-input", "cannot open fit file '" + path + "'");
  ordered_json doc;
  try {
    in >> doc;
    return fit_from_json(doc);
  } catch (const ordered_json::exception& e) {
    fail("parse-error", "bad fit file '" + path + "': " + e.what());
  }
}

inline ordered_json estimator_summary_json(const EstimatorSummary& s) {
  ordered_json j;
  j["name"] = s.name;
  j["n_used"] = s.n_used;
  j["bias"] = s.bias;
  j["sd"] = s.sd;
  j["q1"] = s.q1;
  j["median"] = s.median;
  j["q3"] = s.q3;
  j["whisker_low"] = s.whisker_low;
  j["whisker_high"] = s.whisker_high;
  return j;
}

inline ordered_json simulation_report_json(const SimulationReport& r) {
  ordered_json j;
  j["regime"] = regime_name(r.regime);
  j["n_reps"] = r.n_reps;
  j["excluded"] = r.excluded;
  j["true_mean"] = r.true_mean;
  j["z_design"] = r.z_design;
  j["gamma"] = r.gamma;
  j["seed"] = r.seed;
  j["estimators"] = ordered_json::array(
      {estimator_summary_json(r.mle), estimator_summary_json(r.tsallis)});
  return j;
}

struct ScenarioFile {
  SimScenario scenario;
  std::vector<Regime> regimes;
};

inline ScenarioFile scenario_from_json(const ordered_json& doc) {
  ScenarioFile out;
  SimScenario& sc = out.scenario;
  sc.family = find_family(doc.at("family").get<std::string>());
  const auto& tp = doc.at("true_params");
  for (int i = 0; i < sc.family.arity(); ++i) {
    const std::string& name = sc.family.params()[i].name;
    sc.true_params.slot(i) = tp.at(name).get<double>();
  }
  sc.sigma2 = doc.at("sigma2").get<double>();
  if (doc.contains("xs")) {
    sc.xs = doc.at("xs").get<std::vector<double>>();
  } else {
    const int n = doc.at("n").get<int>();
    sc.xs.resize(n);
    for (int i = 0; i < n; ++i) sc.xs[i] = i + 1.0;
  }
  if (doc.contains("gamma")) sc.gamma = doc.at("gamma").get<double>();
  if (doc.contains("contamination")) {
    const auto& c = doc.at("contamination");
    if (c.contains("epsilon")) sc.contamination.epsilon = c.at("epsilon").get<double>();
    if (c.contains("shift_sigmas"))
      sc.contamination.shift_sigmas = c.at("shift_sigmas").get<double>();
  }
  if (doc.contains("z_design")) sc.z_design = doc.at("z_design").get<double>();
  if (doc.contains("label")) sc.label = doc.at("label").get<std::string>();
  if (doc.contains("regimes")) {
    for (const auto& r : doc.at("regimes"))
      out.regimes.push_back(r.get<std::string>() == "contaminated" ? Regime::Contaminated
                                                                   : Regime::Central);
  } else {
    out.regimes = {Regime::Central, Regime::Contaminated};
  }
  if (!(sc.gamma > 1.0)) fail("invalid-gamma", "scenario gamma must be > 1");
  if (!(sc.sigma2 > 0.0)) fail("invalid-sigma2", "scenario sigma2 must be > 0");
  return out;
}

inline ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("missing-input", "cannot open scenario file '" + path + "'");
  ordered_json doc;
  try {
    in >> doc;
    return scenario_from_json(doc);
  } catch (const ordered_json::exception& e) {
    fail("parse-error", "bad scenario file '" + path + "': " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("write-error", "cannot write '" + path + "'");
  out << content;
}

// Table rows (label, e-hat, CI, d-hat, CI) in the style of the summary tables
// for inflection point and upper asymptote.
inline std::string table_csv(const std::vector<ordered_json>& fit_docs) {
  std::string csv = "label,e,e_lower,e_upper,d,d_lower,d_upper\n";
  for (const ordered_json& doc : fit_docs) {
    const auto& params = doc.at("inference").at("parameters");
    const ordered_json* e = nullptr;
    const ordered_json* d = nullptr;
    for (const auto& p : params) {
      if (p.at("name") == "e") e = &p;
      if (p.at("name") == "d") d = &p;
    }
    if (!e || !d)
      fail("invalid-model",
           "table output needs a model with parameters 'e' and 'd' (fit '" +
               doc.at("data").at("label").get<std::string>() + "')");
    csv += doc.at("data").at("label").get<std::string>() + "," +
           num((*e)["estimate"].get<double>()) + "," + num((*e)["lower"].get<double>()) +
           "," + num((*e)["upper"].get<double>()) + "," +
           num((*d)["estimate"].get<double>()) + "," + num((*d)["lower"].get<double>()) +
           "," + num((*d)["upper"].get<double>()) + "\n";
  }
  return csv;
}

inline std::string forecast_csv(const Forecast& fc, const ordered_json& metadata) {
  std::string csv = "# " + metadata.dump() + "\n";
  csv += "# inflection_day=" + num(fc.inflection_day) +
         " peak_day=" + std::to_string(fc.peak_day) + "\n";
  csv += "day,cumulative,daily\n";
  for (const ForecastPoint& p : fc.points)
    csv += std::to_string(p.day) + "," + num(p.cumulative) + "," + num(p.daily) + "\n";
  return csv;
}

inline std::string influence_csv(const std::vector<InfluenceCurve>& curves,
                                 const std::vector<double>& weights,
                                 const std::vector<double>& residuals,
                                 const ordered_json& metadata) {
  std::string csv = "# " + metadata.dump() + "\n";
  csv += "record,parameter,y,if_normalized,if_proportional\n";
  for (const InfluenceCurve& c : curves)
    for (std::size_t i = 0; i < c.grid.size(); ++i)
      csv += "influence," + c.parameter + "," + num(c.grid[i]) + "," +
             num(c.normalized[i]) + "," + num(c.proportional[i]) + "\n";
  for (std::size_t i = 0; i < weights.size(); ++i)
    csv += "weight,obs" + std::to_string(i + 1) + "," + num(residuals[i]) + "," +
           num(weights[i]) + ",\n";
  return csv;
}

}  // namespace robustfit
