// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reference computations used to check the library: they take a different
// route from the production code (long double finite differences, the
// explicit O(d^3) coefficient sums, O(m k) empirical cdf comparison, sign
// enumeration). Slow by design; test and verify use only.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "maxmart/numeric.hpp"
#include "maxmart/smooth_max.hpp"

namespace maxmart::oracle {

/// G_kappa(v + h (a x + b y + c z)) in long double, without max-shifting
/// unless the exponent would overflow.
inline long double smooth_max_ld(std::span<const double> v, double kappa, long double h,
                                 std::span<const double> x, long double a,
                                 std::span<const double> y = {}, long double b = 0,
                                 std::span<const double> z = {}, long double c = 0) {
  const std::size_t d = v.size();
  std::vector<long double> u(d);
  long double top = -INFINITY;
  for (std::size_t i = 0; i < d; ++i) {
    long double ui = v[i] + h * a * x[i];
    if (!y.empty()) ui += h * b * y[i];
    if (!z.empty()) ui += h * c * z[i];
    u[i] = ui;
    top = std::max(top, ui);
  }
  const long double k = kappa;
  const long double shift = (k * top > 11000.0L) ? top : 0.0L;
  long double sum = 0.0L;
  for (long double ui : u) sum += std::exp(k * (ui - shift));
  return shift + std::log(sum) / k;
}

namespace detail {
template <class F>
long double richardson(F&& central, long double h) {
  return (4.0L * central(h / 2) - central(h)) / 3.0L;
}
}  // namespace detail

inline double fd_d1(std::span<const double> v, std::span<const double> x, double kappa) {
  const long double h0 = 1e-2L / kappa;
  return static_cast<double>(detail::richardson(
      [&](long double h) {
        return (smooth_max_ld(v, kappa, h, x, 1) - smooth_max_ld(v, kappa, h, x, -1)) / (2 * h);
      },
      h0));
}

inline double fd_d2(std::span<const double> v, std::span<const double> x, std::span<const double> y,
                    double kappa) {
  const long double h0 = 1e-2L / kappa;
  return static_cast<double>(detail::richardson(
      [&](long double h) {
        long double acc = 0;
        for (int a : {-1, 1})
          for (int b : {-1, 1}) acc += a * b * smooth_max_ld(v, kappa, h, x, a, y, b);
        return acc / (4 * h * h);
      },
      h0));
}

inline double fd_d3(std::span<const double> v, std::span<const double> x, std::span<const double> y,
                    std::span<const double> z, double kappa) {
  const long double h0 = 1e-2L / kappa;
  return static_cast<double>(detail::richardson(
      [&](long double h) {
        long double acc = 0;
        for (int a : {-1, 1})
          for (int b : {-1, 1})
            for (int c : {-1, 1}) acc += a * b * c * smooth_max_ld(v, kappa, h, x, a, y, b, z, c);
        return acc / (8 * h * h * h);
      },
      h0));
}

/// k p^{-2} sum_{ij} e_i b_ij x_i y_j.
inline double explicit_d2(const CoefficientTables& t, std::span<const double> x,
                          std::span<const double> y, double kappa) {
  double acc = 0.0;
  for (std::size_t i = 0; i < t.dim(); ++i)
    for (std::size_t j = 0; j < t.dim(); ++j) acc += t.exp_term(i) * t.b(i, j) * x[i] * y[j];
  return kappa * acc / (t.p() * t.p());
}

/// k^2 p^{-3} sum_{ijk} e_i c_ijk x_i y_j z_k.
inline double explicit_d3(const CoefficientTables& t, std::span<const double> x,
                          std::span<const double> y, std::span<const double> z, double kappa) {
  double acc = 0.0;
  for (std::size_t i = 0; i < t.dim(); ++i)
    for (std::size_t j = 0; j < t.dim(); ++j)
      for (std::size_t k = 0; k < t.dim(); ++k)
        acc += t.exp_term(i) * t.c(i, j, k) * x[i] * y[j] * z[k];
  return kappa * kappa * acc / (t.p() * t.p() * t.p());
}

/// max over merged sample points of |F_a - F_b|, counting directly: O(m k).
inline double ks_brute_force(std::span<const double> a, std::span<const double> b) {
  double best = 0.0;
  auto cdf = [](std::span<const double> s, double t) {
    std::size_t c = 0;
    for (double v : s) c += (v <= t);
    return static_cast<double>(c) / static_cast<double>(s.size());
  };
  for (auto sample : {a, b})
    for (double t : sample) best = std::max(best, std::abs(cdf(a, t) - cdf(b, t)));
  return best;
}

/// Law of sum_i xi_i / sqrt(n) for n Rademacher signs, by enumerating all
/// 2^n sign patterns.
inline std::map<double, double> rademacher_sum_law(std::size_t n) {
  std::map<double, double> law;
  const std::uint64_t patterns = std::uint64_t{1} << n;
  const double root_n = std::sqrt(static_cast<double>(n));
  for (std::uint64_t bits = 0; bits < patterns; ++bits) {
    int total = 0;
    for (std::size_t i = 0; i < n; ++i) total += ((bits >> i) & 1u) ? 1 : -1;
    law[total / root_n] += 1.0 / static_cast<double>(patterns);
  }
  return law;
}

/// sup_r |F(r) - Phi(r)| for a finite discrete law F, checking both sides of
/// every jump.
inline double kolmogorov_to_standard_normal(const std::map<double, double>& law) {
  double cdf = 0.0, best = 0.0;
  for (const auto& [value, mass] : law) {
    best = std::max(best, std::abs(cdf - normal_cdf(value)));
    cdf += mass;
    best = std::max(best, std::abs(cdf - normal_cdf(value)));
  }
  return best;
}

}  // namespace maxmart::oracle
