// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "maxmart/bounds.hpp"

using namespace maxmart;
using Catch::Approx;

namespace {

std::vector<CovMatrix> constant_sigma(const Eigen::MatrixXd& total, std::size_t n) {
  return std::vector<CovMatrix>(n, CovMatrix(total / static_cast<double>(n)));
}

BoundInputs inputs(std::size_t d, std::size_t n, double vmin2, double vmax2, double beta, double gamma,
                   double alpha, double C = 1.0) {
  return {d, n, vmin2, vmax2, beta, gamma, alpha, C};
}

ScenarioSpec iid(std::size_t d, std::size_t n) {
  ScenarioSpec s;
  s.d = d;
  s.n = n;
  return s;
}

}  // namespace

TEST_CASE("variance_stats") {
  const auto id = variance_stats(constant_sigma(Eigen::MatrixXd::Identity(3, 3), 5));
  CHECK(id.V.matrix().isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-15));
  CHECK(id.v_min_sq == Approx(1.0).epsilon(1e-15));
  CHECK(id.tau == Approx(1.0).epsilon(1e-15));

  Eigen::MatrixXd diag = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  CHECK(variance_stats(constant_sigma(diag, 4)).tau == Approx(2.0).epsilon(1e-15));

  CHECK_THROWS_WITH(variance_stats(constant_sigma(Eigen::Vector2d(0.0, 1.0).asDiagonal().toDenseMatrix(), 2)),
                    Catch::Matchers::ContainsSubstring("v_min > 0"));
  CHECK_THROWS_AS(variance_stats(std::vector<CovMatrix>{}), InputError);
  std::vector<CovMatrix> mixed{CovMatrix::identity(2), CovMatrix::identity(3)};
  CHECK_THROWS_AS(variance_stats(mixed), InputError);
}

TEST_CASE("theorem1_bound worked values") {
  CHECK(theorem1_bound(inputs(2, 2, 1, 1, 0, 1, 0)) == Approx(1.3862943611198906).epsilon(1e-14));
  // beta = 0, alpha = 0: ln(dn) (tau^3 Gamma')^{1/4}.
  CHECK(theorem1_bound(inputs(5, 7, 1, 4, 0, 3, 0)) ==
        Approx(std::log(35.0) * std::pow(8.0 * 3.0, 0.25)).epsilon(1e-14));

  const auto full = theorem1_terms(inputs(4, 10, 0.5, 2.0, 0.3, 1.2, 0.25, 1.5));
  CHECK(full.variance_term == Approx(0.7496494931175809).epsilon(1e-13));
  CHECK(full.third_moment_term == Approx(10.72946262433481).epsilon(1e-13));
  CHECK(full.total() == Approx(11.47911211745239).epsilon(1e-13));

  const auto one = inputs(6, 9, 0.7, 1.3, 0.2, 0.9, 0.1, 1.0);
  auto two = one;
  two.C = 2.0;
  CHECK(theorem1_bound(two) == Approx(2.0 * theorem1_bound(one)).epsilon(1e-15));

  CHECK_THROWS_WITH(theorem1_bound(inputs(1, 4, 1, 1, 0, 1, 0)), Catch::Matchers::ContainsSubstring("d1_bound"));
  CHECK_THROWS_AS(theorem1_bound(inputs(3, 4, 1, 1, 0, 1, 0.3)), InputError);
  CHECK_THROWS_AS(theorem1_bound(inputs(3, 4, 2, 1, 0, 1, 0)), InputError);
  CHECK_THROWS_AS(theorem1_bound(inputs(3, 4, 1, 1, -0.1, 1, 0)), InputError);
  CHECK_THROWS_AS(theorem1_bound(inputs(3, 4, 1, 1, 0, 0, 0)), InputError);
  CHECK_THROWS_AS(theorem1_bound(inputs(3, 4, 0, 1, 0, 1, 0)), PreconditionError);
}

TEST_CASE("corollary_bound") {
  CHECK(corollary_bound(inputs(2, 8, 1, 1, 0, 1, 0)) == Approx(2.4407582774449685).epsilon(1e-14));
  for (std::size_t d : {2u, 3u, 50u})
    for (std::size_t n : {1u, 10u, 1000u}) {
      const auto in = inputs(d, n, 0.4, 1.7, 0.0, 2.2, 0.25, 1.3);
      CHECK(std::abs(theorem1_bound(in) - corollary_bound(in)) <= 1e-12 * corollary_bound(in));
    }
  double prev = INFINITY;
  for (double vmin2 = 0.1; vmin2 <= 2.0; vmin2 += 0.1) {
    const double v = corollary_bound(inputs(4, 16, vmin2, 2.0, 0, 1.5, 0));
    CHECK(v < prev);
    prev = v;
  }
  CHECK(corollary_applies(inputs(4, 16, 1, 1, 0, 1, 0)));
  CHECK_FALSE(corollary_applies(inputs(4, 16, 1, 1, 0.1, 1, 0)));
}

TEST_CASE("d1_bound") {
  CHECK(d1_bound(0, 1) == 1.0);
  CHECK(d1_bound(1, 4) == Approx(1.9142135623730951).epsilon(1e-15));
  CHECK_THROWS_AS(d1_bound(0, 0), InputError);
  CHECK_THROWS_AS(d1_bound(-1, 1), InputError);
  const double beta = 0.3, gamma = 0.8, vmin = 0.9;
  for (double c : {0.1, 2.0, 17.0}) {
    const double base = d1_bound(beta / (vmin * vmin), gamma / std::pow(vmin, 3));
    const double scaled = d1_bound(c * c * beta / std::pow(c * vmin, 2), c * c * c * gamma / std::pow(c * vmin, 3));
    CHECK(scaled == Approx(base).epsilon(1e-13));
  }
}

TEST_CASE("optimal_epsilon") {
  const auto a = optimal_epsilon(inputs(7, 4, 1, 1, 0, 1, 0));
  CHECK(a.epsilon == Approx(std::sqrt(std::log(7.0))).epsilon(1e-15));
  CHECK(a.delta == a.epsilon);
  CHECK(a.kappa * a.delta == Approx(std::log(7.0)).epsilon(1e-15));

  const auto full = optimal_epsilon(inputs(4, 10, 0.5, 2.0, 0.3, 1.2, 0.25, 1.5));
  CHECK(full.epsilon == Approx(0.9122310688614463).epsilon(1e-13));
  CHECK(full.kappa == Approx(1.5196745741735387).epsilon(1e-13));
  CHECK_THROWS_AS(optimal_epsilon(inputs(1, 4, 1, 1, 0, 1, 0)), InputError);
}

TEST_CASE("gamma_floor_check") {
  CHECK_FALSE(gamma_floor_check(0.0, 3, 4, 1.0));
  for (std::size_t n : {1u, 9u, 400u}) {
    const double g = 2.0 / std::sqrt(n);
    CHECK(gamma_floor_check(g, 1, n, 1.0));
    CHECK_FALSE(gamma_floor_check(0.5 / std::sqrt(n), 1, n, 1.0));
  }
  const double floor = std::pow(std::log(20.0), 1.5) / 5.0 * std::pow(2.0, 1.5);
  CHECK(gamma_floor_check(floor, 20, 25, 2.0));
  CHECK_FALSE(gamma_floor_check(floor - 1e-9, 20, 25, 2.0));
}

TEST_CASE("bounds are invariant under rescaling") {
  // (beta, Gamma, v_min, v_max) -> (c^2 beta, c^3 Gamma, c v_min, c v_max).
  const auto base = inputs(5, 12, 0.6, 1.9, 0.4, 2.1, 0.15);
  const auto r0 = evaluate_bounds(base);
  for (double c : {0.01, 0.5, 3.0, 100.0}) {
    auto s = base;
    s.beta *= c * c;
    s.gamma *= c * c * c;
    s.v_min_sq *= c * c;
    s.v_max_sq *= c * c;
    const auto r = evaluate_bounds(s);
    CHECK(std::abs(*r.theorem1_value - *r0.theorem1_value) <= 1e-12 * *r0.theorem1_value);
    CHECK(r.tau == Approx(r0.tau).epsilon(1e-14));
    CHECK(r.beta_prime == Approx(r0.beta_prime).epsilon(1e-13));
    CHECK(r.gamma_prime == Approx(r0.gamma_prime).epsilon(1e-13));
    CHECK(std::abs(d1_bound(r.beta_prime, r.gamma_prime) - d1_bound(r0.beta_prime, r0.gamma_prime)) <= 1e-12);
    auto s0 = s;
    s0.beta = 0;
    auto b0 = base;
    b0.beta = 0;
    CHECK(std::abs(corollary_bound(s0) - corollary_bound(b0)) <= 1e-12 * corollary_bound(b0));
  }
}

TEST_CASE("all bounds decrease in v_min_sq") {
  double prev_t = INFINITY, prev_d = INFINITY;
  for (double vmin2 = 0.05; vmin2 <= 1.5; vmin2 += 0.05) {
    const double t = theorem1_bound(inputs(6, 20, vmin2, 1.5, 0.2, 1.0, 0.1));
    const double d1 = d1_bound(0.2 / vmin2, 1.0 / std::pow(vmin2, 1.5));
    CHECK(t < prev_t);
    CHECK(d1 < prev_d);
    prev_t = t;
    prev_d = d1;
  }
}

TEST_CASE("kind (a) bound ratio between n and 16 n") {
  const auto bound_for = [](std::size_t d, std::size_t n, double alpha) {
    const auto sc = make_scenario(iid(d, n));
    const auto st = compute_atom_statistics(sc, 0, {1, 0}, 0);
    return theorem1_bound(bound_inputs(st, alpha));
  };
  CHECK(bound_for(3, 10, 0) / bound_for(3, 160, 0) ==
        Approx(1.0 / 1.2835262202662623).epsilon(1e-12));
  for (std::size_t d : {2u, 5u, 8u})
    for (std::size_t n : {4u, 64u})
      for (double alpha : {0.0, 0.25}) {
        const double dn = static_cast<double>(d * n);
        const double expected = std::pow(std::log(16.0 * dn) / std::log(dn), 1.0 - alpha / 2.0) *
                                std::pow(16.0, -0.125);
        CHECK(std::abs(bound_for(d, 16 * n, alpha) / bound_for(d, n, alpha) - expected) <= 1e-12);
      }

  // n^{-1/8} wins only once ln(dn) exceeds 8 (1 - alpha/2); below that the
  // log factor grows faster.
  CHECK(bound_for(12, 16 * 2048, 0) < bound_for(12, 2048, 0));
  CHECK(bound_for(2, 1024, 0) > bound_for(2, 64, 0));
}

TEST_CASE("evaluate_bounds report") {
  const auto r = evaluate_bounds(inputs(2, 8, 1, 1, 0, 1, 0));
  CHECK(r.ln_d_below_one);
  CHECK(r.corollary_value.has_value());
  CHECK_FALSE(r.d1_value.has_value());
  CHECK(r.headline() == *r.theorem1_value);

  const auto b = evaluate_bounds(inputs(3, 8, 1, 1, 0.2, 1, 0));
  CHECK(b.corollary_not_applicable);
  CHECK_FALSE(b.corollary_value.has_value());
  CHECK_FALSE(b.ln_d_below_one);

  const auto one = evaluate_bounds(inputs(1, 8, 1, 1, 1, 4, 0));
  CHECK(one.d1_value.has_value());
  CHECK(*one.d1_value == Approx(1.9142135623730951).epsilon(1e-15));
  CHECK(one.headline() == *one.d1_value);
  CHECK_FALSE(one.theorem1_value.has_value());
}
