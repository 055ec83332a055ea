#include "doctest.h"

#include <cmath>

#include "cosmic/dataio.hpp"
#include "cosmic/preprocess.hpp"
#include "cosmic/rng.hpp"

using namespace cosmic;
using namespace cosmic::preprocess;

TEST_CASE("fit_scaler examples") {
  const std::vector<double> x = {2, 4, 6};
  const auto s = fit_scaler(x);
  CHECK(s.mean == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(s.std == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-15));

  const std::vector<double> c = {5, 5, 5};
  CHECK(fit_scaler(c).mean == 5.0);
  CHECK(fit_scaler(c).std == 1.0);

  const std::vector<double> m = {0, 10};
  const auto sm = fit_scaler(m, {true, false});
  CHECK(sm.mean == 0.0);
  CHECK(sm.std == 1.0);

  CHECK_THROWS_AS(fit_scaler(m, {false, false}), DomainError);
}

TEST_CASE("normalize and denormalize") {
  const std::vector<double> x = {2, 4, 6};
  const auto z = normalize(x, fit_scaler(x));
  CHECK(z[0] == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(z[1] == doctest::Approx(0.0));
  CHECK(z[2] == doctest::Approx(1.2247).epsilon(1e-4));

  const std::vector<double> c = {3, 3, 3, 3};
  for (double v : normalize(c, fit_scaler(c))) CHECK(v == 0.0);

  Rng r(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(20);
    for (auto& e : v) e = r.normal(3.0, 5.0);
    const auto s = fit_scaler(v);
    const auto back = denormalize(normalize(v, s), s);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(back[i] - v[i]) < 1e-12);
  }
}

TEST_CASE("normalization equivariance under a*x+b") {
  Rng r(4);
  std::vector<double> x(50);
  for (auto& e : x) e = r.normal();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 3.5 * x[i] - 7.0;
  const auto zx = normalize(x, fit_scaler(x));
  const auto zy = normalize(y, fit_scaler(y));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(zx[i] - zy[i]) < 1e-12);
}

TEST_CASE("patchify shapes and padding") {
  std::vector<double> x512(512, 1.0);
  auto g = patchify(x512, {}, 32);
  CHECK(g.num_patches == 16);
  CHECK(g.padding == 0);

  std::vector<double> x100(100);
  for (int i = 0; i < 100; ++i) x100[static_cast<std::size_t>(i)] = i + 1;
  g = patchify(x100, {}, 32);
  CHECK(g.num_patches == 4);
  CHECK(g.padding == 28);
  for (int i = 0; i < 28; ++i) {
    CHECK_FALSE(g.observed(0, i));
    CHECK(g.value(0, i) == 0.0);
  }
  CHECK(g.observed(0, 28));
  CHECK(g.value(0, 28) == 1.0);
  CHECK(g.value(3, 31) == 100.0);
  CHECK(unpatchify(g) == x100);
  for (int p = 0; p < g.num_patches; ++p) CHECK(g.time_index[static_cast<std::size_t>(p)] == p);

  std::vector<double> one = {7.0};
  g = patchify(one, {}, 1);
  CHECK(g.num_patches == 1);
  CHECK(g.padding == 0);
}

TEST_CASE("patchify zeroes masked values") {
  std::vector<double> x = {1, 2, 3, 4};
  const auto g = patchify(x, {true, false, true, true}, 2);
  CHECK(g.value(0, 1) == 0.0);
  CHECK_FALSE(g.observed(0, 1));
}
