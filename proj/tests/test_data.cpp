#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "robustfit/data.hpp"

using namespace robustfit;

namespace {

std::string write_fixture(const std::string& name, const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "robustfit_tests";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / name).string();
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

const std::string kRegionalCsv =
    "data,stato,codice_regione,denominazione_regione,terapia_intensiva,deceduti\n"
    "2020-03-01T17:00:00,ITA,03,Lombardia,100,50\n"
    "2020-03-01T17:00:00,ITA,05,Veneto,20,5\n"
    "2020-03-02T17:00:00,ITA,03,Lombardia,120,70\n"
    "2020-03-02T17:00:00,ITA,05,Veneto,24,7\n"
    "2020-03-03T17:00:00,ITA,03,Lombardia,150,98\n"
    "2020-03-03T17:00:00,ITA,05,Veneto,30,11\n";

}  // namespace

TEST_CASE("national snapshot loads with day index 1 at the first row", "[data]") {
  const std::string path =
      std::string(ROBUSTFIT_SOURCE_DIR) + "/data/dpc_national_snapshot_20200404.csv";
  LoadOptions opt;
  opt.series = "deceduti";
  const EpidemicSeries s = load_csv(path, opt);
  REQUIRE(s.n() == 41);
  REQUIRE(s.kind == SeriesKind::Cumulative);
  REQUIRE(s.day_index.front() == 1.0);
  REQUIRE(s.day_index.back() == 41.0);
  REQUIRE(s.values.front() == 7.0);
  REQUIRE(s.values.back() == 15362.0);
  REQUIRE(s.region == "national");

  // occupancy column defaults to the daily kind
  LoadOptions icu;
  icu.series = "terapia_intensiva";
  REQUIRE(load_csv(path, icu).kind == SeriesKind::Daily);
}

TEST_CASE("regional filter selects one region", "[data]") {
  const std::string path = write_fixture("regional.csv", kRegionalCsv);
  LoadOptions opt;
  opt.series = "deceduti";
  opt.region = "Lombardia";
  const EpidemicSeries s = load_csv(path, opt);
  REQUIRE(s.n() == 3);
  REQUIRE(s.values == std::vector<double>{50, 70, 98});
  REQUIRE(s.region == "Lombardia");

  LoadOptions missing = opt;
  missing.region = "Molise";
  REQUIRE_THROWS_AS(load_csv(path, missing), Error);
  LoadOptions no_region;
  no_region.layout = CsvLayout::Regional;
  REQUIRE_THROWS_AS(load_csv(path, no_region), Error);
}

TEST_CASE("csv error reporting", "[data]") {
  const std::string bad = write_fixture(
      "bad.csv", "date,value\n2020-03-01,5\n2020-03-02,oops\n");
  try {
    load_csv(bad, LoadOptions{});
    FAIL("expected parse error");
  } catch (const Error& e) {
    REQUIRE(std::string(e.code()) == "parse-error");
    REQUIRE(std::string(e.what()).find("line 3") != std::string::npos);
  }

  const std::string path = write_fixture("generic.csv",
                                         "date,value\n2020-03-01,5\n2020-03-02,7\n");
  LoadOptions unknown;
  unknown.layout = CsvLayout::National;
  unknown.series = "nope";
  try {
    load_csv(path, unknown);
    FAIL("expected unknown column");
  } catch (const Error& e) {
    REQUIRE((std::string(e.code()) == "unknown-column" ||
             std::string(e.code()) == "parse-error"));
  }
}

TEST_CASE("date gaps are errors unless explicitly reindexed", "[data]") {
  const std::string gap = write_fixture(
      "gap.csv", "date,value\n2020-03-01,5\n2020-03-03,7\n2020-03-04,9\n");
  REQUIRE_THROWS_AS(load_csv(gap, LoadOptions{}), Error);
  LoadOptions allow;
  allow.allow_gaps = true;
  const EpidemicSeries s = load_csv(gap, allow);
  REQUIRE(s.day_index == std::vector<double>{1.0, 3.0, 4.0});
}

TEST_CASE("daily/cumulative conversions", "[data]") {
  EpidemicSeries daily;
  daily.kind = SeriesKind::Daily;
  daily.values = {1, 2, 3};
  daily.day_index = {1, 2, 3};
  daily.dates = {Date{2020, 3, 1}, Date{2020, 3, 2}, Date{2020, 3, 3}};

  const EpidemicSeries cum = to_cumulative(daily);
  REQUIRE(cum.values == std::vector<double>{1, 3, 6});
  const EpidemicSeries back = to_daily(cum);
  REQUIRE(back.values == daily.values);

  REQUIRE_THROWS_AS(to_daily(daily), Error);
  REQUIRE_THROWS_AS(to_cumulative(cum), Error);

  // downward revision: preserved with a warning, not clipped
  EpidemicSeries revised = cum;
  revised.values = {5, 9, 8};
  const EpidemicSeries d2 = to_daily(revised);
  REQUIRE(d2.values == std::vector<double>{5, 4, -1});
  REQUIRE_FALSE(d2.warnings.empty());
}

TEST_CASE("identical bytes give identical series", "[data]") {
  const std::string path = write_fixture(
      "stable.csv", "date,value\n2020-03-01,5\n2020-03-02,7\n2020-03-03,12\n");
  const EpidemicSeries a = load_csv(path, LoadOptions{});
  const EpidemicSeries b = load_csv(path, LoadOptions{});
  REQUIRE(a.values == b.values);
  REQUIRE(a.day_index == b.day_index);

  const RegressionModel model = make_model(to_cumulative(a), make_constant());
  REQUIRE(model.label == "national/value");
}
