#include "doctest.h"

#include <cmath>
#include <limits>

#include "cosmic/model.hpp"
#include "cosmic/train.hpp"

using namespace cosmic;

namespace {

ModelConfig tiny_config() {
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

TimeSeriesSample make_sample(int T, int h, int n_cov, std::uint64_t seed, int past_only = 0) {
  Rng rng(seed);
  TimeSeriesSample s;
  s.id = "s";
  s.context_length = T;
  s.horizon = h;
  for (int t = 0; t < T + h; ++t) s.target.push_back(5.0 + std::sin(0.3 * t) + 0.1 * rng.normal());
  for (int i = 0; i < n_cov; ++i) {
    Covariate c;
    c.name = "c" + std::to_string(i);
    const bool po = i < past_only;
    c.kind = po ? CovariateKind::kPastOnly : CovariateKind::kPastAndFuture;
    for (int t = 0; t < (po ? T : T + h); ++t) c.values.push_back(rng.normal());
    s.covariates.push_back(std::move(c));
  }
  return s;
}

}  // namespace

TEST_CASE("token counts") {
  ModelConfig config;
  auto in = model::tokenize(make_sample(128, 64, 2, 1), config);
  CHECK(in.tokens.size() == 19);
  int sep_t = 0, sep_c = 0;
  for (const auto& t : in.tokens) {
    sep_t += t.kind == model::TokenKind::kTargetSeparator;
    sep_c += t.kind == model::TokenKind::kCovariateSeparator;
  }
  CHECK(sep_t == 1);
  CHECK(sep_c == 2);
  CHECK(in.tokens.front().kind == model::TokenKind::kCovariateSeparator);
  CHECK(in.tokens[14].kind == model::TokenKind::kTargetSeparator);

  in = model::tokenize(make_sample(512, 64, 0, 2), config);
  CHECK(in.tokens.size() == 17);
  // the last context patch sits just before the forecast origin, as does the
  // covariate patch covering the same steps
  CHECK(in.tokens.back().time_position == config.max_context_patches - 1);
}

TEST_CASE("covariate and target patches share time positions") {
  ModelConfig config;
  const auto in = model::tokenize(make_sample(128, 64, 1, 3), config);
  // covariate patches: 6 covering [0,192); target patches: 4 covering [0,128)
  for (int j = 0; j < 4; ++j) CHECK(in.tokens[1 + j].time_position == in.tokens[8 + j].time_position);
  CHECK(in.tokens[5].time_position == config.max_context_patches);
  CHECK(in.decoder_time_positions == std::vector<int>{config.max_context_patches});
}

TEST_CASE("past-only covariates are masked over the horizon") {
  auto config = tiny_config();
  const auto in = model::tokenize(make_sample(16, 8, 1, 4, 1), config);
  // 6 patches of 4 over 24 steps, the last two fully masked
  const auto& x = in.patch_inputs;
  CHECK(x.rows() == 6 + 4);
  for (int r = 4; r < 6; ++r) {
    for (int c = 0; c < 8; ++c) CHECK(x(r, c) == 0.0);
  }
  CHECK(x(3, 4) == 1.0);
}

TEST_CASE("too long a context is rejected") {
  ModelConfig config;
  CHECK_THROWS_AS(model::tokenize(make_sample(600, 64, 0, 5), config), DomainError);
  auto tc = tiny_config();
  CHECK_THROWS_AS(model::tokenize(make_sample(16, 8, 4, 5), tc), DomainError);
}

TEST_CASE("output shapes and truncation") {
  ModelConfig config;
  Rng rng(6);
  const auto params = model::init_params(config, rng);
  std::size_t expected = 0;
  for (const auto& [name, shape] : model::parameter_shapes(config)) {
    expected += static_cast<std::size_t>(shape.first * shape.second);
  }
  CHECK(params.num_values() == expected);
  auto out = model::forward(params, model::tokenize(make_sample(128, 64, 1, 7), config), config);
  CHECK(out.rows() == 64);
  CHECK(out.cols() == 9);
  const auto in = model::tokenize(make_sample(128, 100, 0, 8), config);
  CHECK(in.decoder_time_positions.size() == 2);
  out = model::forward(params, in, config);
  CHECK(out.rows() == 100);
  CHECK(out.cols() == 9);
}

TEST_CASE("zero head gives zero normalized output") {
  auto config = tiny_config();
  Rng rng(9);
  const auto params = model::init_params(config, rng, {0.02, true});
  const auto s = make_sample(16, 8, 2, 10);
  const auto out = model::forward(params, model::tokenize(s, config), config);
  CHECK(out.isZero(0.0));
  const auto f = model::predict(params, s, config);
  const auto scaler = model::tokenize(s, config).target_scaler;
  CHECK(f.at(3, 2) == doctest::Approx(scaler.mean));
}

TEST_CASE("quantile loss examples") {
  ad::Matrix<double> pred = ad::Matrix<double>::Zero(1, 9);
  std::vector<double> truth = {1.0};
  CHECK(model::quantile_loss(pred, truth) == doctest::Approx(0.5).epsilon(1e-15));
  pred.setConstant(1.0);
  CHECK(model::quantile_loss(pred, truth) == 0.0);

  // single level 0.9, truth 10, prediction 20: (1 - 0.9) * 10
  ad::Tape<double> t;
  const std::vector<double> level = {0.9};
  auto p = t.leaf(ad::Matrix<double>::Constant(1, 1, 20.0));
  const std::vector<double> y = {10.0};
  CHECK(t.value(t.quantile_loss(p, y, level))(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("pinball loss is minimized at the quantile of a two-point distribution") {
  // P(y=0) = 0.7, P(y=10) = 0.3; the q-quantile is 0 for q <= 0.7 and 10 above
  for (double q : {0.3, 0.6, 0.8, 0.9}) {
    double best = 1e300, argbest = 0;
    for (int i = -20; i <= 120; ++i) {
      const double c = i * 0.1;
      auto pin = [&](double y) { return c <= y ? q * (y - c) : (1 - q) * (c - y); };
      const double expected = 0.7 * pin(0.0) + 0.3 * pin(10.0);
      if (expected < best - 1e-12) {
        best = expected;
        argbest = c;
      }
    }
    CHECK(argbest == doctest::Approx(q < 0.7 ? 0.0 : 10.0));
  }
}

TEST_CASE("covariate ablation identity and sorting") {
  auto config = tiny_config();
  Rng rng(11);
  const auto params = model::init_params(config, rng);
  const auto s = make_sample(16, 8, 0, 12);
  CHECK(model::predict(params, s, config, true) == model::predict(params, s, config, false));
  const auto with = make_sample(16, 8, 2, 12);
  const auto f = model::predict(params, with, config, true, true);
  for (std::size_t t = 0; t < f.horizon(); ++t) {
    for (std::size_t q = 1; q < kNumQuantiles; ++q) CHECK(f.at(t, q) >= f.at(t, q - 1));
  }
}

TEST_CASE("build_input is deterministic") {
  auto config = tiny_config();
  Rng rng(13);
  const auto params = model::init_params(config, rng);
  const auto s = make_sample(16, 8, 2, 14);
  const auto a = model::build_input(params, s, config);
  const auto b = model::build_input(params, s, config);
  CHECK(a.embeddings == b.embeddings);
  CHECK(a.embeddings.rows() == static_cast<Eigen::Index>(a.tokens.size()));
}

TEST_CASE("affine equivariance of predict") {
  auto config = tiny_config();
  Rng rng(15);
  const auto params = model::init_params(config, rng).cast<double>();
  for (int n_cov : {0, 2}) {
    const auto s = make_sample(16, 8, n_cov, 16);
    const auto base = model::predict(params, s, config);
    for (double a : {0.5, 3.0}) {
      for (double b : {-7.0, 100.0}) {
        auto moved = s;
        for (auto& v : moved.target) v = a * v + b;
        const auto f = model::predict(params, moved, config);
        for (std::size_t t = 0; t < f.horizon(); ++t) {
          for (std::size_t q = 0; q < kNumQuantiles; ++q) {
            const double want = a * base.at(t, q) + b;
            CHECK(std::abs(f.at(t, q) - want) <= 1e-5 * std::max(1.0, std::abs(want)));
          }
        }
      }
    }
  }
}

TEST_CASE("non-finite activations name the layer") {
  auto config = tiny_config();
  Rng rng(17);
  auto params = model::init_params(config, rng);
  params.at("enc.0.ff.b2")(0, 0) = std::numeric_limits<float>::infinity();
  try {
    model::predict(params, make_sample(16, 8, 0, 18), config);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("encoder layer 0") != std::string::npos);
  }
}

TEST_CASE("zero head: bias gradient equals the finite difference") {
  auto config = tiny_config();
  Rng rng(19);
  const auto params = model::init_params(config, rng, {0.02, true}).cast<double>();
  const auto s = make_sample(16, 8, 1, 20);
  const auto grads = train::loss_gradient(params, s, config);
  const auto idx = params.lookup("head.b2");
  auto moved = params;
  const auto input = model::tokenize(s, config);
  const auto truth = model::normalized_future(s, input.target_scaler);
  for (Eigen::Index k = 0; k < params[idx].size(); k += 7) {
    const double eps = 1e-6;
    moved[idx].data()[k] = eps;
    const double lp = model::quantile_loss(model::forward(moved, input, config), truth.values, truth.observed);
    moved[idx].data()[k] = -eps;
    const double lm = model::quantile_loss(model::forward(moved, input, config), truth.values, truth.observed);
    moved[idx].data()[k] = 0.0;
    CHECK(std::abs((lp - lm) / (2 * eps) - grads[idx].data()[k]) < 1e-9);
  }
}
