#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "../common/oracles.hpp"
#include "cosmic/evaluation.hpp"
#include "cosmic/rng.hpp"

using namespace cosmic;
using namespace cosmic::evaluation;

TEST_CASE("mase examples") {
  const std::vector<double> ctx = {1, 2, 3, 4};
  const std::vector<double> truth = {5, 6};
  const std::vector<double> fc = {4, 5};
  CHECK(mase(fc, truth, ctx, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mase(truth, truth, ctx, 1) == 0.0);
  const std::vector<double> flat = {3, 3, 3, 3};
  const double v = mase(fc, truth, flat, 1);
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(1e10));
  CHECK_THROWS_AS(mase(fc, truth, ctx, 4), DomainError);
}

TEST_CASE("wql examples") {
  const std::vector<double> truth = {10.0};
  auto f = QuantileForecast::from_point(truth);
  CHECK(wql(f, truth) == 0.0);
  f.at(0, 8) = 20.0;
  CHECK(std::abs(wql(f, truth) - 1.0 / 90.0) < 1e-12);

  const std::vector<double> zeros = {0.0, 0.0};
  CHECK_THROWS_AS(wql(QuantileForecast::from_point(zeros), zeros), DomainError);
}

TEST_CASE("metrics match brute-force oracles and are scale free") {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const int T = static_cast<int>(rng.uniform_int(3, 40));
    const int h = static_cast<int>(rng.uniform_int(1, 12));
    const int S = static_cast<int>(rng.uniform_int(1, T - 1));
    std::vector<double> ctx(static_cast<std::size_t>(T)), truth(static_cast<std::size_t>(h));
    for (auto& v : ctx) v = rng.normal(0.0, 3.0);
    for (auto& v : truth) v = rng.normal(0.0, 3.0);
    QuantileForecast f(static_cast<std::size_t>(h));
    for (std::size_t t = 0; t < f.horizon(); ++t) {
      for (auto& v : f.row(t)) v = rng.normal(0.0, 3.0);
    }
    const auto med = f.median();
    CHECK(std::abs(mase(med, truth, ctx, S) - oracle::mase(med, truth, ctx, S)) < 1e-12);
    CHECK(std::abs(wql(f, truth) - oracle::wql(f, truth)) < 1e-12);

    const double c = 7.0;
    auto scaled_f = f;
    for (std::size_t t = 0; t < f.horizon(); ++t) {
      for (auto& v : scaled_f.row(t)) v *= c;
    }
    auto scaled_truth = truth;
    for (auto& v : scaled_truth) v *= c;
    auto scaled_ctx = ctx;
    for (auto& v : scaled_ctx) v *= c;
    CHECK(wql(scaled_f, scaled_truth) == doctest::Approx(wql(f, truth)).epsilon(1e-12));
    CHECK(mase(scaled_f.median(), scaled_truth, scaled_ctx, S) ==
          doctest::Approx(mase(med, truth, ctx, S)).epsilon(1e-12));
  }
}

TEST_CASE("zero-truth steps are excluded from wql") {
  const std::vector<double> truth = {0.0, 4.0};
  QuantileForecast f(2);
  for (std::size_t q = 0; q < kNumQuantiles; ++q) {
    f.at(0, q) = 100.0;
    f.at(1, q) = 5.0;
  }
  CHECK(wql(f, truth) == doctest::Approx(oracle::wql(f, truth)).epsilon(1e-14));
}

TEST_CASE("rolling schedule") {
  TimeSeriesSample s;
  s.id = "r";
  s.period = 24;
  s.context_length = 1000;
  s.horizon = 1;
  s.target.assign(1000, 1.0);
  CHECK(roll_count(1000, 24) == 4);
  CHECK(roll_count(1000, 48) == 2);
  CHECK(roll_count(60, 24) == 1);
  const auto r = rolling_tasks(s, {1, 2});
  REQUIRE(r.tasks.size() == 6);
  std::vector<int> origins;
  for (int i = 0; i < 4; ++i) origins.push_back(r.tasks[static_cast<std::size_t>(i)].origin);
  CHECK(origins == std::vector<int>{904, 928, 952, 976});
  CHECK(r.tasks[4].origin == 904);
  CHECK(r.tasks[5].origin == 952);
  CHECK(r.tasks[5].horizon == 48);
  CHECK(r.warnings.empty());

  s.target.assign(60, 1.0);
  const auto small = rolling_tasks(s, {1, 2});
  REQUIRE(small.tasks.size() == 1);
  CHECK(small.tasks[0].origin == 36);
  CHECK(small.warnings.size() == 1);
}

TEST_CASE("task_sample splits the series") {
  TimeSeriesSample s;
  s.id = "t";
  s.period = 2;
  for (int i = 0; i < 10; ++i) s.target.push_back(i);
  s.context_length = 10;
  Covariate a{"a", CovariateKind::kPastAndFuture, std::vector<double>(10, 1.0)};
  Covariate b{"b", CovariateKind::kPastOnly, std::vector<double>(10, 2.0)};
  s.covariates = {a, b};
  const auto t = task_sample(s, {"t", 6, 2, 2});
  CHECK(t.context_length == 6);
  CHECK(t.target.size() == 8);
  CHECK(t.covariates[0].values.size() == 8);
  CHECK(t.covariates[1].values.size() == 6);
  CHECK_NOTHROW(t.validate());
  CHECK_THROWS_AS(task_sample(s, {"t", 9, 2, 2}), DomainError);
}

TEST_CASE("aggregate examples") {
  GroupScores scores;
  scores["g1"] = {{"naive", 2.0}, {"m", 1.0}};
  scores["g2"] = {{"naive", 1.0}, {"m", 2.0}};
  const auto table = aggregate(scores, "naive");
  CHECK(table.models.at("m").geometric_mean == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(table.models.at("naive").geometric_mean == 1.0);
  CHECK(table.models.at("m").average_rank == 1.5);

  scores["g2"]["bad"] = 0.0;
  scores["g1"]["bad"] = 1.0;
  const auto with_bad = aggregate(scores, "naive");
  CHECK(with_bad.models.at("bad").groups_used == 1);
  CHECK(with_bad.warnings.size() == 1);

  GroupScores missing;
  missing["g"] = {{"m", 1.0}};
  CHECK_THROWS_AS(aggregate(missing, "naive"), DomainError);
}

TEST_CASE("aggregate matches a brute-force recomputation") {
  Rng rng(2);
  const std::vector<std::string> models = {"naive", "a", "b"};
  GroupScores scores;
  for (int g = 0; g < 5; ++g) {
    for (const auto& m : models) scores["g" + std::to_string(g)][m] = std::round(rng.uniform(1.0, 4.0));
  }
  const auto table = aggregate(scores, "naive");
  for (const auto& m : models) {
    double log_sum = 0.0, rank_sum = 0.0;
    for (const auto& [group, row] : scores) {
      log_sum += std::log(row.at(m) / row.at("naive"));
      std::vector<double> sorted;
      for (const auto& [name, v] : row) sorted.push_back(v);
      std::sort(sorted.begin(), sorted.end());
      double first = 0, last = 0;
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] == row.at(m)) {
          if (first == 0) first = static_cast<double>(i + 1);
          last = static_cast<double>(i + 1);
        }
      }
      rank_sum += (first + last) / 2.0;
    }
    CHECK(table.models.at(m).geometric_mean == doctest::Approx(std::exp(log_sum / 5.0)).epsilon(1e-12));
    CHECK(table.models.at(m).average_rank == doctest::Approx(rank_sum / 5.0).epsilon(1e-12));
  }

  GroupScores reordered;
  for (auto it = scores.rbegin(); it != scores.rend(); ++it) reordered["z" + it->first] = it->second;
  const auto again = aggregate(reordered, "naive");
  for (const auto& m : models) {
    CHECK(again.models.at(m).geometric_mean == doctest::Approx(table.models.at(m).geometric_mean).epsilon(1e-12));
    CHECK(again.models.at(m).average_rank == table.models.at(m).average_rank);
  }
}
