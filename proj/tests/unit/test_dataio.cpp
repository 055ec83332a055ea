#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cosmic/dataio.hpp"
#include "cosmic/rng.hpp"

using namespace cosmic;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / ("cosmic_dataio_" + name); }

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string series_json(int n) {
  std::string s = "[";
  for (int i = 0; i < n; ++i) s += (i ? "," : "") + std::to_string(i);
  return s + "]";
}

}  // namespace

TEST_CASE("minimal record loads") {
  const auto p = temp_file("minimal.jsonl");
  write(p, R"({"id":"a","period":1,"context_length":24,"horizon":24,"target":)" + series_json(48) + "}\n");
  const auto corpus = load_corpus(p);
  REQUIRE(corpus.size() == 1);
  CHECK(corpus[0].id == "a");
  CHECK(corpus[0].covariates.empty());
  CHECK(corpus[0].target.size() == 48);
}

TEST_CASE("covariate length rules") {
  const auto p = temp_file("cov.jsonl");
  write(p, R"({"id":"a","period":1,"context_length":24,"horizon":24,"target":)" + series_json(48) +
               R"(,"covariates":{"x":{"kind":"past_only","values":)" + series_json(24) + "}}}\n");
  CHECK(load_corpus(p).size() == 1);

  write(p, R"({"id":"bad","period":1,"context_length":24,"horizon":24,"target":)" + series_json(48) +
               R"(,"covariates":{"x":{"kind":"past_and_future","values":)" + series_json(47) + "}}}\n");
  try {
    load_corpus(p);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bad") != std::string::npos);
    CHECK(msg.find("covariates.x") != std::string::npos);
  }
}

TEST_CASE("malformed line reports its line number") {
  const auto p = temp_file("broken.jsonl");
  write(p, R"({"id":"a","period":1,"context_length":1,"horizon":1,"target":[1,2]})"
           "\n\n{not json\n");
  try {
    load_corpus(p);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("missing values must be masked, not encoded") {
  TimeSeriesSample s;
  s.id = "m";
  s.target = {1, std::nan(""), 3};
  s.context_length = 2;
  s.horizon = 1;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.target[1] = 0.0;
  s.missing_mask = {true, false, true};
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("corpus round trip keeps covariate order and exact values") {
  Rng r(3);
  std::vector<TimeSeriesSample> samples;
  for (int i = 0; i < 20; ++i) {
    TimeSeriesSample s;
    s.id = "g/" + std::to_string(i);
    s.context_length = 5;
    s.horizon = 3;
    s.period = 2;
    for (int t = 0; t < 8; ++t) s.target.push_back(r.normal() * 1e3);
    s.covariates.push_back({"zeta", CovariateKind::kPastAndFuture, {}});
    s.covariates.push_back({"alpha", CovariateKind::kPastOnly, {}});
    for (int t = 0; t < 8; ++t) s.covariates[0].values.push_back(r.normal());
    for (int t = 0; t < 5; ++t) s.covariates[1].values.push_back(r.normal());
    if (i % 2) s.missing_mask = {true, true, false, true, true, true, true, true};
    samples.push_back(s);
  }
  const auto p = temp_file("roundtrip.jsonl");
  save_corpus(samples, p);
  const auto back = load_corpus(p);
  REQUIRE(back.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(back[i].target == samples[i].target);
    CHECK(back[i].missing_mask == samples[i].missing_mask);
    REQUIRE(back[i].covariates.size() == 2);
    CHECK(back[i].covariates[0].name == "zeta");
    CHECK(back[i].covariates[1].kind == CovariateKind::kPastOnly);
    CHECK(back[i].covariates[1].values == samples[i].covariates[1].values);
  }
}

TEST_CASE("forecast files") {
  const auto p = temp_file("fc.jsonl");
  save_forecasts({}, p);
  CHECK(read(p).empty());

  QuantileForecast f(2);
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::size_t q = 0; q < kNumQuantiles; ++q) f.at(t, q) = static_cast<double>(t * 10 + q);
  }
  save_forecasts({{"s", 4, f}}, p);
  const auto text = read(p);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  const auto one = load_forecasts(p);
  REQUIRE(one.size() == 1);
  CHECK(one[0].forecast.horizon() == 2);

  Rng r(8);
  std::vector<ForecastRecord> records;
  for (int i = 0; i < 100; ++i) {
    QuantileForecast g(static_cast<std::size_t>(r.uniform_int(1, 5)));
    for (std::size_t t = 0; t < g.horizon(); ++t) {
      for (auto& v : g.row(t)) v = r.normal() * std::pow(10.0, r.uniform_int(-5, 5));
    }
    records.push_back({"id" + std::to_string(i), static_cast<int>(r.uniform_int(0, 1000)), g});
  }
  save_forecasts(records, p);
  CHECK(load_forecasts(p) == records);
}

TEST_CASE("forecast levels are checked") {
  std::string row = "[1,2,3,4,5,6,7,8,9]";
  CHECK_THROWS_AS(forecast_from_json_line(R"({"sample_id":"a","origin":1,"levels":[0.1,0.2],"values":[)" + row + "]}"),
                  ParseError);
  CHECK_NOTHROW(forecast_from_json_line(
      R"({"sample_id":"a","origin":1,"levels":[0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9],"values":[)" + row + "]}"));
}
