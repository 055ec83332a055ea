#include "doctest.h"

#include <cmath>

#include "cosmic/train.hpp"

using namespace cosmic;

namespace {

ModelConfig tiny_model() {
  ModelConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_layers_enc = 1;
  c.n_layers_dec = 1;
  c.d_ff = 16;
  c.m_in = 4;
  c.m_out = 4;
  c.max_context_patches = 8;
  c.max_horizon_patches = 4;
  c.max_covariates = 3;
  return c;
}

TrainConfig tiny_train(int steps) {
  TrainConfig t;
  t.steps = steps;
  t.batch_size = 4;
  t.context_length = 16;
  t.horizon = 8;
  t.learning_rate = 1e-2;
  return t;
}

// eight fixed sinusoids, one picked per sample
train::SampleSource sinusoid_source() {
  return [](Rng& rng) {
    const int k = static_cast<int>(rng.uniform_int(0, 7));
    TimeSeriesSample s;
    s.id = "sin" + std::to_string(k);
    s.context_length = 16;
    s.horizon = 8;
    const double period = 6.0 + k;
    const double phase = rng.uniform(0.0, 6.283185307179586);
    for (int t = 0; t < 24; ++t) s.target.push_back(std::sin(6.283185307179586 * t / period + phase));
    return s;
  };
}

TimeSeriesSample covariate_sample(std::uint64_t seed) {
  Rng rng(seed);
  TimeSeriesSample s;
  s.id = "g";
  s.context_length = 16;
  s.horizon = 8;
  Covariate c;
  c.name = "x";
  for (int t = 0; t < 24; ++t) {
    c.values.push_back(rng.normal());
    s.target.push_back(std::cos(0.4 * t) + 0.5 * c.values.back() + 0.05 * rng.normal());
  }
  s.covariates.push_back(c);
  return s;
}

}  // namespace

TEST_CASE("learning rate schedule") {
  auto t = tiny_train(100);
  CHECK(train::learning_rate_at(t, 0) == doctest::Approx(t.learning_rate / 5));
  CHECK(train::learning_rate_at(t, 4) == doctest::Approx(t.learning_rate));
  CHECK(train::learning_rate_at(t, 99) < 1e-5);
  for (int s = 5; s < 99; ++s) CHECK(train::learning_rate_at(t, s + 1) <= train::learning_rate_at(t, s));
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const auto mc = tiny_model();
  Rng init(1);
  const auto params = model::init_params(mc, init);
  auto tc = tiny_train(3);
  tc.learning_rate = 0.0;
  Rng rng(2);
  const auto result = train::train(params, sinusoid_source(), mc, tc, rng);
  CHECK(result.params == params);
  CHECK(result.loss_trace.size() == 3);
}

TEST_CASE("training is deterministic") {
  const auto mc = tiny_model();
  Rng init(3);
  const auto params = model::init_params(mc, init);
  Rng a(4), b(4);
  const auto ra = train::train(params, sinusoid_source(), mc, tiny_train(5), a);
  const auto rb = train::train(params, sinusoid_source(), mc, tiny_train(5), b);
  CHECK(ra.params == rb.params);
  CHECK(ra.loss_trace == rb.loss_trace);
}

TEST_CASE("loss halves on a small sinusoid set") {
  const auto mc = tiny_model();
  Rng init(5);
  const auto params = model::init_params(mc, init);
  Rng rng(6);
  const auto result = train::train(params, sinusoid_source(), mc, tiny_train(200), rng);
  auto mean = [&](std::size_t from, std::size_t to) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += result.loss_trace[i];
    return s / static_cast<double>(to - from);
  };
  CHECK(mean(180, 200) < 0.5 * mean(0, 10));
}

TEST_CASE("gradient check passes on a tiny model") {
  const auto mc = tiny_model();
  Rng init(9);
  const auto params = model::init_params(mc, init).cast<double>();
  Rng rng(10);
  const auto r = train::gradient_check(params, covariate_sample(11), mc, 1e-5, 60, rng);
  CHECK(r.checked + r.skipped == 60);
  CHECK(r.checked > 40);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("loss_gradient covers every parameter") {
  const auto mc = tiny_model();
  Rng init(12);
  const auto params = model::init_params(mc, init).cast<double>();
  double loss = 0.0;
  const auto g = train::loss_gradient(params, covariate_sample(13), mc, &loss);
  REQUIRE(g.size() == params.size());
  CHECK(loss > 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g[i].rows() == params[i].rows());
    CHECK(g[i].cols() == params[i].cols());
  }
}
