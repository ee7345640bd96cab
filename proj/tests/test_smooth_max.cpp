// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "maxmart/oracles.hpp"
#include "maxmart/rng.hpp"
#include "maxmart/smooth_max.hpp"

using namespace maxmart;
using Catch::Approx;

namespace {

std::vector<double> random_vector(CounterRng& rng, std::size_t d, double lo, double hi) {
  std::vector<double> v(d);
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

/// Rescaled so that ||x||_inf = 1.
std::vector<double> unit_direction(CounterRng& rng, std::size_t d) {
  auto x = random_vector(rng, d, -1.0, 1.0);
  const double m = max_norm(x);
  for (double& v : x) v /= m;
  return x;
}

double scaled_error(double value, double reference, double scale) {
  return std::abs(value - reference) / std::max(std::abs(reference), scale);
}

}  // namespace

TEST_CASE("smooth_max worked values") {
  CHECK(smooth_max(std::vector{0.0, 0.0, 0.0, 0.0}, SmoothMaxParams(1.0)) ==
        Approx(std::log(4.0)).epsilon(1e-15));
  for (double k : {0.1, 1.0, 100.0}) CHECK(smooth_max(std::vector{5.0}, SmoothMaxParams(k)) == 5.0);
  CHECK(smooth_max(std::vector{0.0, 1.0}, SmoothMaxParams(1.0)) ==
        Approx(std::log(1.0 + std::numbers::e)).epsilon(1e-15));
  CHECK(std::log(1.0 + std::numbers::e) == Approx(1.313262).margin(1e-6));
}

TEST_CASE("smooth_max does not overflow and rejects bad input") {
  const SmoothMaxParams big(100.0);
  CHECK(smooth_max(std::vector{1e4, 1e4 - 1.0}, big) == Approx(1e4).epsilon(1e-15));
  CHECK(std::isfinite(smooth_max(std::vector{-1e6, 1e6}, big)));
  CHECK_THROWS_AS(smooth_max(std::vector<double>{}, big), InputError);
  CHECK_THROWS_AS(smooth_max(std::vector{1.0, std::nan("")}, big), InputError);
  CHECK_THROWS_AS(SmoothMaxParams(0.0), InputError);
  CHECK_THROWS_AS(SmoothMaxParams(-1.0), InputError);
  CHECK_THROWS_AS(SmoothMaxParams(INFINITY), InputError);
}

TEST_CASE("sandwich M <= G <= M + ln(d)/kappa") {
  CounterRng rng({11, 0});
  for (int trial = 0; trial < 2000; ++trial) {
    const auto d = 1 + static_cast<std::size_t>(rng.uniform() * 200);
    const double k = std::pow(10.0, -1.0 + 3.0 * rng.uniform());
    const auto x = random_vector(rng, d, -50, 50);
    const double gap = smooth_max(x, SmoothMaxParams(k)) - hard_max(x);
    REQUIRE(gap >= 0.0);
    REQUIRE(gap <= std::log(static_cast<double>(d)) / k + 1e-12);
  }
}

TEST_CASE("translation equivariance") {
  CounterRng rng({12, 0});
  const SmoothMaxParams p(3.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto x = random_vector(rng, 7, -2, 2);
    const double c = -5 + 10 * rng.uniform();
    auto shifted = x;
    for (double& v : shifted) v += c;
    CHECK(smooth_max(shifted, p) == Approx(smooth_max(x, p) + c).margin(1e-12));
    const auto w0 = softmax_weights(x, p), w1 = softmax_weights(shifted, p);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(w1[i] == Approx(w0[i]).margin(1e-12));
  }
}

TEST_CASE("softmax_weights") {
  const auto even = softmax_weights(std::vector{0.0, 0.0}, SmoothMaxParams(7.0));
  CHECK(even[0] == 0.5);
  CHECK(even[1] == 0.5);

  const auto w = softmax_weights(std::vector{0.0, 1.0}, SmoothMaxParams(1.0));
  const double e = std::numbers::e;
  CHECK(w[0] == Approx(1.0 / (1.0 + e)).epsilon(1e-14));
  CHECK(w[1] == Approx(e / (1.0 + e)).epsilon(1e-14));
  CHECK(w[0] == Approx(0.268941).margin(1e-6));

  const auto dom = softmax_weights(std::vector{0.0, 40.0, 0.0}, SmoothMaxParams(1.0));
  CHECK(dom[1] == Approx(1.0).margin(1e-16));
  CHECK(dom[0] < 1e-17);
  CHECK(dom[2] < 1e-17);

  CounterRng rng({13, 0});
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = random_vector(rng, 20, -30, 30);
    const auto ww = softmax_weights(v, SmoothMaxParams(5.0));
    double total = 0;
    for (double x : ww) {
      CHECK(x > 0.0);
      total += x;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("directional derivatives: closed cases") {
  const SmoothMaxParams p(2.0);
  const std::vector<double> zero(5, 0.0), x{1, 2, 3, 4, 5};
  CHECK(directional_d1(zero, x, p) == Approx(3.0).epsilon(1e-15));

  CounterRng rng({14, 0});
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = random_vector(rng, 6, -3, 3);
    const auto u = random_vector(rng, 6, -1, 1);
    CHECK(directional_d2(v, u, u, p) >= 0.0);
  }
  CHECK_THROWS_AS(directional_d1(zero, std::vector{1.0}, p), InputError);
  CHECK_THROWS_AS(directional_d3(zero, x, x, std::vector{1.0, 2.0}, p), InputError);
}

TEST_CASE("directional derivatives agree with finite differences") {
  CounterRng rng({15, 0});
  for (double k : {0.1, 1.0, 10.0}) {
    const SmoothMaxParams p(k);
    for (std::size_t d : {1u, 2u, 5u, 20u, 50u}) {
      for (int trial = 0; trial < 10; ++trial) {
        const auto v = random_vector(rng, d, -2, 2);
        const auto x = unit_direction(rng, d), y = unit_direction(rng, d), z = unit_direction(rng, d);
        CHECK(scaled_error(directional_d1(v, x, p), oracle::fd_d1(v, x, k), 1.0) < 1e-6);
        CHECK(scaled_error(directional_d2(v, x, y, p), oracle::fd_d2(v, x, y, k), k) < 1e-6);
        CHECK(scaled_error(directional_d3(v, x, y, z, p), oracle::fd_d3(v, x, y, z, k), k * k) < 1e-6);
      }
    }
  }
}

TEST_CASE("factored derivatives equal the explicit coefficient sums") {
  // Independent spot value: d = 4, kappa = 2 from the c_ijk table.
  CounterRng rng({16, 0});
  for (std::size_t d = 1; d <= 6; ++d) {
    for (int trial = 0; trial < 20; ++trial) {
      const double k = 0.5 + 3.0 * rng.uniform();
      const SmoothMaxParams p(k);
      const auto v = random_vector(rng, d, -2, 2);
      const auto x = random_vector(rng, d, -1, 1), y = random_vector(rng, d, -1, 1),
                 z = random_vector(rng, d, -1, 1);
      const auto t = explicit_coefficients(v, p);
      const double s2 = k * max_norm(x) * max_norm(y);
      const double s3 = k * k * max_norm(x) * max_norm(y) * max_norm(z);
      CHECK(scaled_error(directional_d2(v, x, y, p), oracle::explicit_d2(t, x, y, k), s2) < 1e-10);
      CHECK(scaled_error(directional_d3(v, x, y, z, p), oracle::explicit_d3(t, x, y, z, k), s3) < 1e-10);
    }
  }
}

TEST_CASE("derivative bounds with unit max-norm directions") {
  CounterRng rng({17, 0});
  for (int trial = 0; trial < 500; ++trial) {
    const auto d = 1 + static_cast<std::size_t>(rng.uniform() * 30);
    const double k = std::pow(10.0, -1.0 + 2.0 * rng.uniform());
    const SmoothMaxParams p(k);
    const auto v = random_vector(rng, d, -5, 5);
    const auto x = unit_direction(rng, d), y = unit_direction(rng, d), z = unit_direction(rng, d);
    CHECK(std::abs(directional_d1(v, x, p)) <= 1.0 + 1e-12);
    CHECK(std::abs(directional_d2(v, x, y, p)) <= 2.0 * k * (1.0 + 1e-12));
    CHECK(std::abs(directional_d3(v, x, y, z, p)) <= 6.0 * k * k * (1.0 + 1e-12));
  }
}

TEST_CASE("explicit coefficient tables") {
  SECTION("d = 1 is degenerate") {
    const auto t = explicit_coefficients(std::vector{0.3}, SmoothMaxParams(2.0));
    CHECK(t.b(0, 0) == 0.0);
    CHECK(t.c(0, 0, 0) == 0.0);
  }
  SECTION("d = 2 at the origin") {
    const auto t = explicit_coefficients(std::vector{0.0, 0.0}, SmoothMaxParams(1.0));
    CHECK(t.p() == 2.0);
    CHECK(t.b(0, 0) == 1.0);
    CHECK(t.b(0, 1) == -1.0);
    CHECK(t.b(1, 0) == -1.0);
    CHECK(t.b(1, 1) == 1.0);
  }
  SECTION("weighted coefficient sums") {
    CounterRng rng({18, 0});
    for (int trial = 0; trial < 300; ++trial) {
      const auto d = 1 + static_cast<std::size_t>(rng.uniform() * 8);
      const auto v = random_vector(rng, d, -3, 3);
      const auto t = explicit_coefficients(v, SmoothMaxParams(0.2 + 5 * rng.uniform()));
      CHECK(t.weighted_abs_b_sum() <= 2.0 * t.p() * t.p() * (1 + 1e-14));
      CHECK(t.weighted_abs_c_sum() <= 6.0 * t.p() * t.p() * t.p() * (1 + 1e-14));
    }
  }
  SECTION("cap") {
    const std::vector<double> v(9, 0.0);
    CHECK_THROWS_WITH(explicit_coefficients(v, SmoothMaxParams(1.0)),
                      Catch::Matchers::ContainsSubstring("cap of 8"));
    CHECK_NOTHROW(explicit_coefficients(v, SmoothMaxParams(1.0), 9));
  }
}

TEST_CASE("smooth_step") {
  const SmoothStep half(0.5);
  CHECK(smooth_step(-1.0, half) == 1.0);
  CHECK(smooth_step(0.25, half) == 0.5);
  CHECK(smooth_step(0.5, half) == 0.0);
  CHECK(smooth_step(3.0, half, 2) == 0.0);
  CHECK(smooth_step(-3.0, half, 3) == 0.0);
  CHECK_THROWS_AS(SmoothStep(0.0), InputError);
  CHECK_THROWS_AS(smooth_step(0.1, half, 4), InputError);

  const SmoothStep unit(1.0);
  const double h = 1e-5;
  for (double x : {0.05, 0.3, 0.5, 0.77, 0.95}) {
    for (int order = 1; order <= 3; ++order) {
      const double fd = (unit(x + h, order - 1) - unit(x - h, order - 1)) / (2 * h);
      CHECK(unit(x, order) == Approx(fd).margin(1e-6));
    }
  }

  // Monotone, in [0, 1], derivative bounds on a fine grid.
  for (double eps : {0.01, 1.0, 7.5}) {
    const SmoothStep f(eps);
    double prev = 1.0;
    std::array<double, 3> worst{};
    for (int i = 0; i <= 100000; ++i) {
      const double x = eps * (-0.1 + 1.2 * i / 100000.0);
      const double value = f(x);
      CHECK(value >= 0.0);
      CHECK(value <= 1.0);
      CHECK(value <= prev + 1e-15);
      prev = value;
      for (int j = 1; j <= 3; ++j)
        worst[j - 1] = std::max(worst[j - 1], std::abs(f(x, j)) * std::pow(eps, j));
    }
    for (int j = 0; j < 3; ++j) {
      CHECK(worst[j] <= kSmoothStepDerivativeMax[j] * (1 + 1e-12));
      CHECK(worst[j] <= kSmoothStepBound);
      CHECK(worst[j] >= 0.99 * kSmoothStepDerivativeMax[j]);
    }
  }
}

TEST_CASE("smoothed_indicator plateaus") {
  const SmoothMaxParams k1(1.0);
  const SmoothStep eps(0.1);
  const double r = 0.7;
  CHECK(smoothed_indicator(std::vector{r - 10.0, r - 11.0}, r, k1, eps) == 1.0);
  CHECK(smoothed_indicator(std::vector{r + 10.0, r - 11.0}, r, k1, eps) == 0.0);
  CHECK(smoothed_indicator(std::vector{0.0, 0.0}, std::log(2.0), k1, SmoothStep(1.0)) == 1.0);
}
