#include "doctest.h"

#include <cmath>
#include <set>

#include "cosmic/experiments.hpp"

using namespace cosmic;
using namespace cosmic::experiments;

namespace {

Config tiny() {
  Config c;
  c.model.d_model = 8;
  c.model.n_heads = 2;
  c.model.n_layers_enc = 1;
  c.model.n_layers_dec = 1;
  c.model.d_ff = 16;
  c.model.m_in = 4;
  c.model.m_out = 4;
  c.model.max_context_patches = 8;
  c.model.max_horizon_patches = 4;
  c.model.max_covariates = 3;
  c.augment.k_max = 3;
  c.train.steps = 6;
  c.train.batch_size = 2;
  c.train.context_length = 16;
  c.train.horizon = 8;
  c.experiment.context_length = 16;
  c.experiment.horizon = 8;
  c.experiment.base_length = 24;
  c.experiment.corpus_size = 10;
  c.experiment.eval_samples = 3;
  c.experiment.event_counts = {0, 1, 2};
  c.experiment.covariate_counts = {1, 2};
  return c;
}

}  // namespace

TEST_CASE("base corpus") {
  const auto c = tiny();
  Rng a(1), b(1);
  const auto corpus = generate_base_corpus(c.experiment, a);
  CHECK(corpus.size() == 10);
  for (const auto& s : corpus) CHECK(s.size() == 24);
  CHECK(corpus == generate_base_corpus(c.experiment, b));
}

TEST_CASE("event samples") {
  const auto c = tiny();
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto s = make_event_sample(c.experiment, {2, 1, true}, rng, "e");
    CHECK_NOTHROW(s.validate());
    CHECK(s.covariates.size() == 2);
    CHECK(s.context_length == 16);
    CHECK(s.horizon == 8);
    // exactly one covariate carries a horizon event
    int with_event = 0;
    for (const auto& cov : s.covariates) {
      double peak = 0.0;
      for (std::size_t t = 16; t < 24; ++t) peak = std::max(peak, std::abs(cov.values[t]));
      with_event += peak > 0.5 * c.experiment.bell_amplitude;
    }
    CHECK(with_event >= 1);
  }

  Rng zero(3);
  const auto s = make_event_sample(c.experiment, {1, 0, false}, zero, "z");
  CHECK(s.covariates.size() == 1);
}

TEST_CASE("training source yields valid samples") {
  const auto c = tiny();
  Rng rng(4);
  const auto corpus = generate_base_corpus(c.experiment, rng);
  for (bool informative : {true, false}) {
    const auto source = make_training_source(corpus, c, informative);
    Rng draw(5);
    for (int i = 0; i < 10; ++i) {
      const auto s = source(draw);
      CHECK_NOTHROW(s.validate());
      CHECK(s.context_length == 16);
      CHECK(s.horizon == 8);
    }
  }
}

TEST_CASE("ablation report shape and determinism") {
  const auto c = tiny();
  const auto a = run_ablation(c, 11);
  const auto b = run_ablation(c, 11);
  CHECK(a.cells.size() == 4);
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& cell : a.cells) {
    keys.insert({cell.model, cell.inference});
    CHECK(std::isfinite(cell.wql));
    CHECK(std::isfinite(cell.mase));
  }
  CHECK(keys.size() == 4);
  CHECK(to_json(a) == to_json(b));
  CHECK(to_csv(a) == to_csv(b));
  CHECK(to_json(a).find("model.d_model") != std::string::npos);
  CHECK(a.models.size() == 2);
  CHECK(a.loss_traces.at("augmented").size() == 6);
}

TEST_CASE("sensitivity grid shape and determinism") {
  auto c = tiny();
  const auto r = run_impact_sensitivity(c, 12);
  CHECK(r.cells.size() == 3 * 2 * 2);
  for (const auto& cell : r.cells) {
    CHECK(std::isfinite(cell.advantage));
  }
  CHECK(to_json(r) == to_json(run_impact_sensitivity(c, 12)));
  CHECK(to_csv(r).find("event_count") != std::string::npos);
}

TEST_CASE("ridge beats its own base on lag-0 events") {
  auto c = tiny();
  c.experiment.context_length = 64;
  c.experiment.base_length = 80;
  c.experiment.horizon = 16;
  c.experiment.bell_amplitude = 3.0;
  c.experiment.event_counts = {2};
  c.experiment.covariate_counts = {1};
  c.experiment.eval_samples = 20;
  c.model.max_context_patches = 16;
  c.model.max_horizon_patches = 4;
  c.train.context_length = 64;
  c.train.horizon = 16;
  const auto r = run_impact_sensitivity(c, 13);
  CHECK(r.mean_advantage("ridge-ctx", 2) > 0.0);
}
