#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "robustfit/common.hpp"
#include "robustfit/dataset.hpp"

namespace robustfit {

struct Date {
  int year = 0, month = 0, day = 0;

  // days since 1970-01-01 (civil-from-days algorithm)
  long to_days() const {
    int y = year - (month <= 2 ? 1 : 0);
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (month + (month > 2 ? -3 : 9)) + 2u) / 5u + day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
  }

  std::string iso() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
  }

  static Date from_days(long days) {
    const long z = days + 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long y = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned dom = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return Date{static_cast<int>(y + (m <= 2 ? 1 : 0)), static_cast<int>(m),
                static_cast<int>(dom)};
  }

  static std::optional<Date> parse(const std::string& text) {
    // accepts "YYYY-MM-DD" with optional trailing time ("T.." or " ..")
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    Date d;
    auto num = [&](int lo, int len, int& out) {
      out = 0;
      for (int i = lo; i < lo + len; ++i) {
        if (text[i] < '0' || text[i] > '9') return false;
        out = out * 10 + (text[i] - '0');
      }
      return true;
    };
    if (!num(0, 4, d.year) || !num(5, 2, d.month) || !num(8, 2, d.day)) return std::nullopt;
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) return std::nullopt;
    return d;
  }
};

enum class SeriesKind { Cumulative, Daily };

inline const char* series_kind_name(SeriesKind k) {
  return k == SeriesKind::Cumulative ? "cumulative" : "daily";
}

struct EpidemicSeries {
  std::vector<Date> dates;
  std::vector<double> day_index;  // x values; 1 at the first observation
  std::vector<double> values;
  std::string region = "national";
  std::string series_name;
  SeriesKind kind = SeriesKind::Daily;
  std::vector<std::string> warnings;

  std::size_t n() const { return values.size(); }
};

enum class CsvLayout { Auto, National, Regional, Generic };

struct LoadOptions {
  CsvLayout layout = CsvLayout::Auto;
  std::string series = "deceduti";
  std::string region;             // required for regional files
  bool allow_gaps = false;        // reindex by calendar day instead of failing
  std::optional<SeriesKind> kind_override;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline SeriesKind default_kind_for_column(const std::string& column) {
  // dpc columns that are running totals; everything else is a daily level
  static const char* cumulative_columns[] = {"deceduti", "dimessi_guariti", "totale_casi",
                                             "tamponi", "casi_testati"};
  for (const char* c : cumulative_columns)
    if (column == c) return SeriesKind::Cumulative;
  return SeriesKind::Daily;
}

inline double parse_count(const std::string& cell, std::size_t line_no) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v))
    fail("parse-error", "line " + std::to_string(line_no) + ": '" + cell +
                            "' is not a number");
  return v;
}

}  // namespace detail

inline EpidemicSeries load_csv(const std::string& path, const LoadOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) fail("missing-input", "cannot open '" + path + "'");

  std::string header_line;
  if (!std::getline(in, header_line)) fail("parse-error", "empty file '" + path + "'");
  const std::vector<std::string> header = detail::split_csv_line(header_line);

  auto column_of = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };

  CsvLayout layout = opt.layout;
  if (layout == CsvLayout::Auto) {
    if (column_of("denominazione_regione") >= 0)
      layout = CsvLayout::Regional;
    else if (column_of("data") >= 0)
      layout = CsvLayout::National;
    else if (column_of("date") >= 0 && column_of("value") >= 0)
      layout = CsvLayout::Generic;
    else
      fail("parse-error", "unrecognized CSV header in '" + path + "'");
  }

  const std::string date_col = layout == CsvLayout::Generic ? "date" : "data";
  const std::string value_col = layout == CsvLayout::Generic ? "value" : opt.series;
  const int date_idx = column_of(date_col);
  const int value_idx = column_of(value_col);
  if (date_idx < 0) fail("parse-error", "missing date column '" + date_col + "'");
  if (value_idx < 0) {
    std::string cols;
    for (const auto& h : header) cols += " " + h;
    fail("unknown-column", "column '" + value_col + "' not found; available:" + cols);
  }
  const int region_idx =
      layout == CsvLayout::Regional ? column_of("denominazione_regione") : -1;
  if (layout == CsvLayout::Regional && opt.region.empty())
    fail("invalid-options", "regional layout requires a region name");

  EpidemicSeries series;
  series.series_name = value_col;
  series.region = layout == CsvLayout::Regional ? opt.region : "national";
  series.kind = opt.kind_override.value_or(detail::default_kind_for_column(value_col));

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() <= static_cast<std::size_t>(std::max(date_idx, value_idx)))
      fail("parse-error", "line " + std::to_string(line_no) + ": too few fields");
    if (region_idx >= 0 && cells[region_idx] != opt.region) continue;
    const auto date = Date::parse(cells[date_idx]);
    if (!date)
      fail("parse-error", "line " + std::to_string(line_no) + ": bad date '" +
                              cells[date_idx] + "'");
    series.dates.push_back(*date);
    series.values.push_back(detail::parse_count(cells[value_idx], line_no));
  }
  if (series.values.empty()) {
    if (layout == CsvLayout::Regional)
      fail("unknown-region", "no rows for region '" + opt.region + "' in '" + path + "'");
    fail("parse-error", "no data rows in '" + path + "'");
  }

  // dates must advance one calendar day at a time unless gaps are allowed
  series.day_index.resize(series.n());
  const long day0 = series.dates.front().to_days();
  for (std::size_t i = 0; i < series.n(); ++i) {
    const long di = series.dates[i].to_days() - day0;
    if (i > 0) {
      const long step = series.dates[i].to_days() - series.dates[i - 1].to_days();
      if (step <= 0)
        fail("parse-error", "dates are not strictly increasing at " + series.dates[i].iso());
      if (step != 1 && !opt.allow_gaps)
        fail("date-gap", "missing day(s) before " + series.dates[i].iso() +
                             " (pass allow-gaps to reindex by calendar day)");
    }
    series.day_index[i] = static_cast<double>(di + 1);
  }
  return series;
}

inline EpidemicSeries to_cumulative(const EpidemicSeries& s) {
  if (s.kind != SeriesKind::Daily)
    fail("kind-mismatch", "to_cumulative expects a daily series");
  EpidemicSeries out = s;
  out.kind = SeriesKind::Cumulative;
  double run = 0.0;
  for (std::size_t i = 0; i < s.n(); ++i) {
    run += s.values[i];
    out.values[i] = run;
  }
  return out;
}

inline EpidemicSeries to_daily(const EpidemicSeries& s) {
  if (s.kind != SeriesKind::Cumulative)
    fail("kind-mismatch", "to_daily expects a cumulative series");
  EpidemicSeries out = s;
  out.kind = SeriesKind::Daily;
  for (std::size_t i = 0; i < s.n(); ++i) {
    out.values[i] = i == 0 ? s.values[0] : s.values[i] - s.values[i - 1];
    if (out.values[i] < 0.0)
      out.warnings.push_back("negative daily value " + std::to_string(out.values[i]) +
                             " at " + s.dates[i].iso() + " (downward revision kept as-is)");
  }
  return out;
}

inline RegressionModel make_model(const EpidemicSeries& series, const MeanFunction& family) {
  std::string label = series.region + "/" + series.series_name;
  return RegressionModel(series.day_index, series.values, family, label);
}

}  // namespace robustfit
