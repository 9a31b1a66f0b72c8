// Copyright 2026 The ecgmv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "doctest.h"
#include "ecgmv/augment/augment.hpp"
#include "ecgmv/errors.hpp"
#include "support/test_util.hpp"

using namespace ecgmv;
using namespace ecgmv::augment;

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

Tensor ecg_like(std::size_t n, std::uint64_t seed) { return testing::random_tensor({12, n}, seed); }

// Dense Gaussian elimination for the natural-spline second derivatives, then the textbook
// piecewise formula. Independent of the tridiagonal solver under test.
double reference_spline(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  const std::size_t n = xs.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  a[0][0] = 1.0;
  a[n - 1][n - 1] = 1.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = xs[i] - xs[i - 1], h1 = xs[i + 1] - xs[i];
    a[i][i - 1] = h0 / 6.0;
    a[i][i] = (h0 + h1) / 3.0;
    a[i][i + 1] = h1 / 6.0;
    a[i][n] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = a[i][n] / a[i][i];
  std::size_t i = 0;
  while (i + 2 < n && x > xs[i + 1]) ++i;
  const double h = xs[i + 1] - xs[i];
  const double t0 = xs[i + 1] - x, t1 = x - xs[i];
  return m[i] * t0 * t0 * t0 / (6 * h) + m[i + 1] * t1 * t1 * t1 / (6 * h) + (ys[i] / h - m[i] * h / 6) * t0 +
         (ys[i + 1] / h - m[i + 1] * h / 6) * t1;
}

}  // namespace

TEST_CASE("cubic spline") {
  SUBCASE("passes through its knots and matches a dense solve") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(-2.0, 2.0);
      const std::size_t k = 2 + seed % 6;
      std::vector<double> xs(k), ys(k);
      double x = 0;
      for (std::size_t i = 0; i < k; ++i) {
        x += 0.5 + std::abs(u(rng));
        xs[i] = x;
        ys[i] = u(rng);
      }
      CubicSpline s(xs, ys);
      for (std::size_t i = 0; i < k; ++i) CHECK(s(xs[i]) == doctest::Approx(ys[i]).epsilon(1e-12));
      for (int q = 0; q < 50; ++q) {
        const double at = xs.front() + (xs.back() - xs.front()) * q / 49.0;
        CHECK(s(at) == doctest::Approx(reference_spline(xs, ys, at)).epsilon(1e-10));
      }
    }
  }
  SUBCASE("reproduces straight lines") {
    CubicSpline s({0, 1, 3, 7}, {1, 3, 7, 15});
    for (double x : {0.0, 0.5, 2.0, 5.5, 7.0}) CHECK(s(x) == doctest::Approx(2 * x + 1).epsilon(1e-12));
  }
  SUBCASE("rejects bad knots") {
    CHECK_THROWS_AS(CubicSpline({0.0}, {1.0}), ContractError);
    CHECK_THROWS_AS(CubicSpline({0.0, 0.0}, {1.0, 2.0}), ContractError);
  }
}

TEST_CASE("jitter") {
  Tensor x = ecg_like(300, 1);
  Rng rng(0);
  CHECK(values(jitter(x, 0.0, rng)) == values(x));
  CHECK(jitter(ecg_like(17, 2), 0.3, rng).shape() == ad::Shape{12, 17});
  CHECK_THROWS_AS(jitter(x, -0.1, rng), ContractError);

  const double sigma = 0.05;
  Tensor base({12, 15000}, 0.0);
  Rng r2(7);
  Tensor y = jitter(base, sigma, r2);
  double mean = 0, sq = 0;
  for (double v : y.data()) mean += v;
  mean /= static_cast<double>(y.size());
  for (double v : y.data()) sq += (v - mean) * (v - mean);
  const double var = sq / static_cast<double>(y.size() - 1);
  CHECK(std::abs(var - sigma * sigma) <= 0.1 * sigma * sigma);
}

TEST_CASE("scale") {
  Tensor x = ecg_like(50, 3);
  Rng rng(1);
  CHECK(values(scale(x, {1, 1}, rng)) == values(x));
  auto doubled = scale(x, {2, 2}, rng);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(doubled.data()[i] == 2.0 * x.data()[i]);
  CHECK(values(scale(Tensor({12, 50}, 0.0), {0.5, 3.0}, rng)) == std::vector<double>(600, 0.0));
  // One factor per lead: every lead is a constant multiple of its input.
  auto y = scale(x, {0.8, 1.2}, rng);
  for (std::size_t l = 0; l < 12; ++l) {
    const double f = y.data()[l * 50] / x.data()[l * 50];
    CHECK(f >= 0.8);
    CHECK(f <= 1.2);
    for (std::size_t t = 0; t < 50; ++t) CHECK(y.data()[l * 50 + t] == doctest::Approx(f * x.data()[l * 50 + t]));
  }
  CHECK_THROWS_AS(scale(x, {0.0, 1.0}, rng), ContractError);
}

TEST_CASE("magnitude_warp") {
  Tensor x = ecg_like(200, 4);
  Rng rng(2);
  CHECK(values(magnitude_warp(x, 4, 0.0, rng)) == values(x));
  CHECK(magnitude_warp(x, 6, 0.2, rng).shape() == x.shape());
  SUBCASE("the multiplier curve passes through the drawn knot values") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng a(seed), b(seed);
      const std::size_t n = 1001;
      const int knots = 5;
      auto m = magnitude_curve(n, knots, 0.2, a);
      std::normal_distribution<double> dist(1.0, 0.2);
      for (std::size_t i = 0; i < static_cast<std::size_t>(knots); ++i) {
        const double expected = dist(b);
        CHECK(m[i * 250] == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS_AS(magnitude_warp(x, 1, 0.1, rng), ContractError);
}

TEST_CASE("time_warp") {
  Tensor x = ecg_like(500, 5);
  Rng rng(3);
  CHECK(values(time_warp(x, 4, 0.0, rng)) == values(x));
  SUBCASE("time map is strictly increasing and endpoint-pinned for every seed") {
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
      Rng r(seed);
      const double sigma = 0.05 + 0.5 * static_cast<double>(seed % 10) / 9.0;
      auto tau = time_warp_map(1000, 4 + static_cast<int>(seed % 3), sigma, r);
      CHECK(tau.front() == 0.0);
      CHECK(tau.back() == 999.0);
      bool increasing = true;
      for (std::size_t t = 1; t < tau.size(); ++t) increasing = increasing && tau[t] > tau[t - 1];
      CHECK(increasing);
    }
  }
  SUBCASE("warped signals keep their first and last samples") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng r(seed);
      auto y = time_warp(x, 4, 0.2, r);
      CHECK(y.shape() == x.shape());
      for (std::size_t l = 0; l < 12; ++l) {
        CHECK(y.data()[l * 500] == x.data()[l * 500]);
        CHECK(y.data()[l * 500 + 499] == x.data()[l * 500 + 499]);
      }
    }
  }
}

TEST_CASE("permute") {
  Tensor x = ecg_like(97, 6);
  Rng rng(4);
  CHECK(values(permute(x, 1, rng)) == values(x));
  SUBCASE("definitional example") {
    Tensor s({1, 4}, {1, 2, 3, 4});
    const std::array<std::size_t, 1> cuts{2};
    const std::array<std::size_t, 2> order{1, 0};
    CHECK(values(permute_segments(s, cuts, order)) == std::vector<double>{3, 4, 1, 2});
  }
  SUBCASE("each lead keeps its multiset of values") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng r(seed);
      auto y = permute(x, 2 + static_cast<int>(seed % 8), r);
      for (std::size_t l = 0; l < 12; ++l) {
        std::vector<double> a(x.data().begin() + l * 97, x.data().begin() + (l + 1) * 97);
        std::vector<double> b(y.data().begin() + l * 97, y.data().begin() + (l + 1) * 97);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        CHECK(a == b);
      }
    }
  }
  SUBCASE("all leads share the same cuts") {
    Tensor ramp({3, 40});
    for (std::size_t l = 0; l < 3; ++l)
      for (std::size_t t = 0; t < 40; ++t) ramp.data()[l * 40 + t] = static_cast<double>(t);
    Rng r(9);
    auto y = permute(ramp, 4, r);
    for (std::size_t t = 0; t < 40; ++t) {
      CHECK(y.data()[t] == y.data()[40 + t]);
      CHECK(y.data()[t] == y.data()[80 + t]);
    }
  }
  CHECK_THROWS_AS(permute(x, 0, rng), ContractError);
  CHECK_THROWS_AS(permute(x, 98, rng), ContractError);
}

TEST_CASE("random_resample") {
  Tensor x = ecg_like(300, 7);
  SUBCASE("original grid is the identity") {
    std::vector<double> grid(300);
    for (std::size_t i = 0; i < 300; ++i) grid[i] = static_cast<double>(i);
    auto y = resample_at(x, grid);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y.data()[i] - x.data()[i]) <= 1e-12);
  }
  SUBCASE("length is preserved and linear ramps survive") {
    Tensor ramp({12, 300});
    for (std::size_t l = 0; l < 12; ++l)
      for (std::size_t t = 0; t < 300; ++t) ramp.data()[l * 300 + t] = 0.5 * static_cast<double>(l) - 0.01 * t;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      Rng rng(seed);
      auto y = random_resample(ramp, 0.8, rng);
      CHECK(y.shape() == ramp.shape());
      for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y.data()[i] - ramp.data()[i]) <= 1e-9);
    }
  }
  SUBCASE("bad rates") {
    Rng rng(0);
    CHECK_THROWS_AS(random_resample(x, 0.0, rng), ContractError);
    CHECK_THROWS_AS(random_resample(x, 1.5, rng), ContractError);
  }
}

TEST_CASE("draw_pipeline") {
  AugmentConfig cfg;
  SUBCASE("pipeline size is uniform over 0..6") {
    Rng rng(0);
    std::array<int, 7> counts{};
    for (int i = 0; i < 10000; ++i) {
      auto d = draw_pipeline(cfg, rng);
      ++counts[d.ops.size()];
      std::set<OpKind> uniq(d.ops.begin(), d.ops.end());
      REQUIRE(uniq.size() == d.ops.size());
      // Canonical order.
      for (std::size_t j = 1; j < d.ops.size(); ++j) CHECK(d.ops[j - 1] < d.ops[j]);
    }
    for (int c : counts) CHECK(std::abs(c / 10000.0 - 1.0 / 7.0) <= 0.02);
  }
  SUBCASE("parameters lie inside the configured space") {
    Rng rng(1);
    for (int i = 0; i < 500; ++i) {
      auto d = draw_pipeline(cfg, rng);
      CHECK(d.params.jitter_sigma >= 0.01);
      CHECK(d.params.jitter_sigma <= 0.05);
      CHECK(d.params.permute_segments >= 2);
      CHECK(d.params.permute_segments <= 5);
      CHECK(d.params.magwarp_sigma <= 0.2);
      CHECK(d.params.timewarp_sigma >= 0.05);
    }
  }
  SUBCASE("disabled augmentation never draws operations") {
    cfg.enabled = false;
    Rng rng(2);
    for (int i = 0; i < 100; ++i) CHECK(draw_pipeline(cfg, rng).empty());
  }
  SUBCASE("invalid configurations") {
    Rng rng(3);
    auto bad = cfg;
    bad.scale = {1.2, 0.8};
    CHECK_THROWS_AS(draw_pipeline(bad, rng), ConfigError);
    bad = cfg;
    bad.resample_min_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.magwarp_knots = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.permute_segments = {0, 3};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
}

TEST_CASE("apply_batch") {
  Tensor batch = testing::random_tensor({4, 12, 400}, 11);
  AugmentConfig cfg;
  SUBCASE("empty pipeline leaves the batch unchanged") {
    PipelineDraw d;
    d.seed = 5;
    CHECK(values(apply_batch(batch, d)) == values(batch));
  }
  SUBCASE("shape, determinism and thread-count independence") {
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
      auto d = draw_pipeline(cfg, rng);
      auto a = apply_batch(batch, d, 1);
      CHECK(a.shape() == batch.shape());
      CHECK(values(apply_batch(batch, d, 1)) == values(a));
      CHECK(values(apply_batch(batch, d, 3)) == values(a));
    }
  }
  SUBCASE("records draw independent stochastic values") {
    PipelineDraw d;
    d.ops = {OpKind::kJitter};
    d.params.jitter_sigma = 0.1;
    d.seed = 42;
    Tensor zeros({2, 12, 100}, 0.0);
    auto y = apply_batch(zeros, d);
    CHECK(!std::equal(y.data().begin(), y.data().begin() + 1200, y.data().begin() + 1200));
  }
  SUBCASE("full pipeline with every operation preserves shape") {
    PipelineDraw d;
    d.ops.assign(kCanonicalOrder.begin(), kCanonicalOrder.end());
    d.params.jitter_sigma = 0.02;
    d.params.scale = {0.8, 1.2};
    d.params.magwarp_sigma = 0.1;
    d.params.timewarp_sigma = 0.1;
    d.params.permute_segments = 3;
    d.params.resample_min_rate = 0.8;
    auto y = apply_batch(batch, d, 2);
    CHECK(y.shape() == batch.shape());
    for (double v : y.data()) CHECK(std::isfinite(v));
  }
  CHECK_THROWS_AS(apply_batch(Tensor({12, 10}), PipelineDraw{}), DimensionError);
}
