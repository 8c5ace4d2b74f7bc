#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "robustfit/common.hpp"
#include "robustfit/prediction.hpp"
#include "robustfit/simulation.hpp"

namespace robustfit {

// Minimal standalone SVG emitter: polylines, points, axes with ticks, labels.
// Deliberately no external plotting dependency.
namespace svg {

struct Scale {
  double lo = 0, hi = 1, out_lo = 0, out_hi = 1;
  double operator()(double v) const {
    return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
  }
};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
  const double span = hi - lo;
  if (!(span > 0)) return {lo};
  double step = std::pow(10.0, std::floor(std::log10(span / target)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (span / (step * m) <= target) {
      step *= m;
      break;
    }
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step)
    ticks.push_back(t);
  return ticks;
}

class Panel {
public:
  Panel(double x, double y, double w, double h, std::string title)
      : x_(x), y_(y), w_(w), h_(h), title_(std::move(title)) {}

  void set_range(double xlo, double xhi, double ylo, double yhi) {
    const double pad = 0.04;
    const double dx = (xhi - xlo) * pad + 1e-12, dy = (yhi - ylo) * pad + 1e-12;
    sx_ = {xlo - dx, xhi + dx, x_ + 46, x_ + w_ - 8};
    sy_ = {ylo - dy, yhi + dy, y_ + h_ - 28, y_ + 18};
  }

  void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& color, double width = 1.5) {
    std::string pts;
    for (std::size_t i = 0; i < xs.size(); ++i)
      pts += fmt(sx_(xs[i])) + "," + fmt(sy_(ys[i])) + " ";
    body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
             fmt(width) + "\" points=\"" + pts + "\"/>\n";
  }

  void points(const std::vector<double>& xs, const std::vector<double>& ys,
              const std::string& color, double r = 1.6) {
    for (std::size_t i = 0; i < xs.size(); ++i)
      body_ += "<circle cx=\"" + fmt(sx_(xs[i])) + "\" cy=\"" + fmt(sy_(ys[i])) +
               "\" r=\"" + fmt(r) + "\" fill=\"" + color + "\"/>\n";
  }

  void box(double center_x, double half_width, const EstimatorSummary& s,
           const std::string& color) {
    const double x0 = sx_(center_x - half_width), x1 = sx_(center_x + half_width);
    const double xm = sx_(center_x);
    auto rect_line = [&](double y, double xa, double xb) {
      body_ += "<line x1=\"" + fmt(xa) + "\" y1=\"" + fmt(sy_(y)) + "\" x2=\"" + fmt(xb) +
               "\" y2=\"" + fmt(sy_(y)) + "\" stroke=\"" + color + "\"/>\n";
    };
    body_ += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(sy_(s.q3)) + "\" width=\"" +
             fmt(x1 - x0) + "\" height=\"" + fmt(sy_(s.q1) - sy_(s.q3)) +
             "\" fill=\"none\" stroke=\"" + color + "\"/>\n";
    rect_line(s.median, x0, x1);
    rect_line(s.whisker_low, (x0 + xm) / 2, (x1 + xm) / 2);
    rect_line(s.whisker_high, (x0 + xm) / 2, (x1 + xm) / 2);
    body_ += "<line x1=\"" + fmt(xm) + "\" y1=\"" + fmt(sy_(s.q1)) + "\" x2=\"" + fmt(xm) +
             "\" y2=\"" + fmt(sy_(s.whisker_low)) + "\" stroke=\"" + color + "\"/>\n";
    body_ += "<line x1=\"" + fmt(xm) + "\" y1=\"" + fmt(sy_(s.q3)) + "\" x2=\"" + fmt(xm) +
             "\" y2=\"" + fmt(sy_(s.whisker_high)) + "\" stroke=\"" + color + "\"/>\n";
  }

  void label(double x, double y, const std::string& text, const std::string& color) {
    body_ += "<text x=\"" + fmt(sx_(x)) + "\" y=\"" + fmt(sy_(y)) +
             "\" font-size=\"10\" fill=\"" + color + "\">" + text + "</text>\n";
  }

  std::string render() const {
    std::string out;
    out += "<text x=\"" + fmt(x_ + w_ / 2) + "\" y=\"" + fmt(y_ + 12) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + title_ + "</text>\n";
    // frame
    out += "<rect x=\"" + fmt(sx_.out_lo) + "\" y=\"" + fmt(sy_.out_hi) + "\" width=\"" +
           fmt(sx_.out_hi - sx_.out_lo) + "\" height=\"" + fmt(sy_.out_lo - sy_.out_hi) +
           "\" fill=\"none\" stroke=\"#888\"/>\n";
    for (double t : nice_ticks(sx_.lo, sx_.hi)) {
      out += "<line x1=\"" + fmt(sx_(t)) + "\" y1=\"" + fmt(sy_.out_lo) + "\" x2=\"" +
             fmt(sx_(t)) + "\" y2=\"" + fmt(sy_.out_lo + 4) + "\" stroke=\"#888\"/>\n";
      out += "<text x=\"" + fmt(sx_(t)) + "\" y=\"" + fmt(sy_.out_lo + 15) +
             "\" font-size=\"9\" text-anchor=\"middle\">" + fmt(t) + "</text>\n";
    }
    for (double t : nice_ticks(sy_.lo, sy_.hi)) {
      out += "<line x1=\"" + fmt(sx_.out_lo - 4) + "\" y1=\"" + fmt(sy_(t)) + "\" x2=\"" +
             fmt(sx_.out_lo) + "\" y2=\"" + fmt(sy_(t)) + "\" stroke=\"#888\"/>\n";
      out += "<text x=\"" + fmt(sx_.out_lo - 6) + "\" y=\"" + fmt(sy_(t) + 3) +
             "\" font-size=\"9\" text-anchor=\"end\">" + fmt(t) + "</text>\n";
    }
    return out + body_;
  }

private:
  double x_, y_, w_, h_;
  std::string title_;
  Scale sx_, sy_;
  std::string body_;
};

inline std::string document(double w, double h, const std::string& body) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" +
         fmt(h) + "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) +
         "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" "
         "fill=\"white\"/>\n" +
         body + "</svg>\n";
}

}  // namespace svg

// Three panels: fitted cumulative over the full horizon, observed-window zoom,
// daily curve (observed points in black, fitted curve in red).
inline std::string forecast_svg(const std::vector<double>& obs_x,
                                const std::vector<double>& obs_y, const Forecast& fc,
                                const std::string& label) {
  std::vector<double> fx, fcum, fdaily;
  for (const ForecastPoint& p : fc.points) {
    fx.push_back(p.day);
    fcum.push_back(p.cumulative);
    fdaily.push_back(p.daily);
  }
  std::vector<double> obs_daily(obs_y.size());
  for (std::size_t i = 0; i < obs_y.size(); ++i)
    obs_daily[i] = i == 0 ? obs_y[0] : obs_y[i] - obs_y[i - 1];

  auto minmax = [](const std::vector<double>& v) {
    return std::pair<double, double>(*std::min_element(v.begin(), v.end()),
                                     *std::max_element(v.begin(), v.end()));
  };
  std::string body;
  {
    svg::Panel p(0, 0, 320, 260, label + " cumulative");
    auto [ylo1, yhi1] = minmax(fcum);
    auto [ylo2, yhi2] = minmax(obs_y);
    p.set_range(1, fx.back(), std::min(ylo1, ylo2), std::max(yhi1, yhi2));
    p.polyline(fx, fcum, "red");
    p.points(obs_x, obs_y, "black");
    body += p.render();
  }
  {
    svg::Panel p(320, 0, 320, 260, "observed window");
    auto [ylo, yhi] = minmax(obs_y);
    p.set_range(obs_x.front(), obs_x.back(), ylo, yhi);
    std::vector<double> wx, wy;
    for (std::size_t i = 0; i < fx.size(); ++i)
      if (fx[i] <= obs_x.back()) {
        wx.push_back(fx[i]);
        wy.push_back(fcum[i]);
      }
    p.polyline(wx, wy, "red");
    p.points(obs_x, obs_y, "black");
    body += p.render();
  }
  {
    svg::Panel p(640, 0, 320, 260, "daily");
    auto [ylo1, yhi1] = minmax(fdaily);
    auto [ylo2, yhi2] = minmax(obs_daily);
    p.set_range(1, fx.back(), std::min(ylo1, ylo2), std::max(yhi1, yhi2));
    p.polyline(fx, fdaily, "red");
    p.points(obs_x, obs_daily, "black");
    p.label(fc.peak_day, yhi1, "peak day " + std::to_string(fc.peak_day), "red");
    body += p.render();
  }
  return svg::document(960, 260, body);
}

inline std::string density_svg(const std::vector<PredictiveDensity>& densities,
                               const std::string& label) {
  double xlo = 1e300, xhi = -1e300, yhi = 0;
  for (const auto& d : densities) {
    xlo = std::min(xlo, d.grid.front());
    xhi = std::max(xhi, d.grid.back());
    for (double v : d.density) yhi = std::max(yhi, v);
  }
  svg::Panel p(0, 0, 480, 300, label + " estimative predictive density");
  p.set_range(xlo, xhi, 0, yhi);
  const char* colors[] = {"red", "blue", "green", "orange"};
  for (std::size_t i = 0; i < densities.size(); ++i) {
    p.polyline(densities[i].grid, densities[i].density, colors[i % 4]);
    p.label(densities[i].mean, yhi * (0.95 - 0.07 * i),
            std::string(objective_name(densities[i].kind)) + " mean " +
                svg::fmt(densities[i].mean),
            colors[i % 4]);
  }
  return svg::document(480, 300, p.render());
}

inline std::string boxplot_svg(const std::vector<SimulationReport>& reports) {
  double ylo = 1e300, yhi = -1e300;
  for (const auto& r : reports) {
    for (const EstimatorSummary* s : {&r.mle, &r.tsallis}) {
      ylo = std::min(ylo, s->whisker_low);
      yhi = std::max(yhi, s->whisker_high);
    }
    ylo = std::min(ylo, r.true_mean);
    yhi = std::max(yhi, r.true_mean);
  }
  svg::Panel p(0, 0, 480, 320, "point estimators of mu(z, beta)");
  p.set_range(0, 2.0 * reports.size(), ylo, yhi);
  double cx = 0.5;
  for (const auto& r : reports) {
    p.box(cx, 0.3, r.mle, "black");
    p.label(cx - 0.3, ylo, std::string("mle/") + regime_name(r.regime), "black");
    p.box(cx + 1.0, 0.3, r.tsallis, "red");
    p.label(cx + 0.7, ylo, std::string("tsallis/") + regime_name(r.regime), "red");
    cx += 2.0;
  }
  p.polyline({0.0, 2.0 * reports.size()}, {reports[0].true_mean, reports[0].true_mean},
             "#999", 0.8);
  return svg::document(480, 320, p.render());
}

}  // namespace robustfit
