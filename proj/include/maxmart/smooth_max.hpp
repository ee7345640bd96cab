// SPDX-License-Identifier: Apache-2.0
#pragma once

// Log-sum-exp smooth maximum G_k(x) = k^{-1} ln sum_j exp(k x_j), its
// directional derivatives up to order three, and the C^3 smoothing step used
// to turn cdf differences into expectations of smooth functions.
//
// All exponential sums are evaluated after shifting by max_j x_j; the shift
// cancels exactly in every quantity below.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "maxmart/errors.hpp"
#include "maxmart/numeric.hpp"

namespace maxmart {

class SmoothMaxParams {
 public:
  explicit SmoothMaxParams(double kappa) : kappa_(kappa) {
    if (!(kappa > 0.0) || !std::isfinite(kappa))
      throw InputError("SmoothMaxParams: kappa must be positive and finite");
  }
  double kappa() const { return kappa_; }

 private:
  double kappa_;
};

/// k^{-1} ln sum_j exp(k x_j). Satisfies M(x) <= G(x) <= M(x) + ln(d)/k.
inline double smooth_max(std::span<const double> x, const SmoothMaxParams& params) {
  require_finite(x, "smooth_max");
  const double k = params.kappa();
  std::size_t top = 0;
  for (std::size_t j = 1; j < x.size(); ++j)
    if (x[j] > x[top]) top = j;
  const double m = x[top];
  double rest = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (j != top) rest += std::exp(k * (x[j] - m));
  return m + std::log1p(rest) / k;
}

/// w_i = exp(k v_i) / p(v).
inline std::vector<double> softmax_weights(std::span<const double> v,
                                           const SmoothMaxParams& params) {
  require_finite(v, "softmax_weights");
  const double k = params.kappa();
  const double m = hard_max(v);
  std::vector<double> w(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    w[i] = std::exp(k * (v[i] - m));
    total += w[i];
  }
  for (double& wi : w) wi /= total;
  return w;
}

namespace detail {

inline void require_same_dim(std::size_t d, std::span<const double> u, const char* who) {
  if (u.size() != d)
    throw InputError(std::string(who) + ": dimension mismatch (expected " +
                     std::to_string(d) + ", got " + std::to_string(u.size()) + ")");
  require_finite(u, who);
}

inline double weighted_mean(std::span<const double> w, std::span<const double> u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * u[i];
  return acc;
}

}  // namespace detail

/// G'(v)(x) = E_w[x].
inline double directional_d1(std::span<const double> v, std::span<const double> x,
                             const SmoothMaxParams& params) {
  const auto w = softmax_weights(v, params);
  detail::require_same_dim(v.size(), x, "directional_d1");
  return detail::weighted_mean(w, x);
}

/// G''(v)(x, y) = k Cov_w(x, y), evaluated in centered form.
inline double directional_d2(std::span<const double> v, std::span<const double> x,
                             std::span<const double> y, const SmoothMaxParams& params) {
  const auto w = softmax_weights(v, params);
  detail::require_same_dim(v.size(), x, "directional_d2");
  detail::require_same_dim(v.size(), y, "directional_d2");
  const double mx = detail::weighted_mean(w, x);
  const double my = detail::weighted_mean(w, y);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * (x[i] - mx) * (y[i] - my);
  return params.kappa() * acc;
}

/// G'''(v)(x, y, z) = k^2 E_w[(x - E_w x)(y - E_w y)(z - E_w z)], which expands
/// to E[xyz] - E[x]E[yz] - E[y]E[xz] - E[z]E[xy] + 2E[x]E[y]E[z].
inline double directional_d3(std::span<const double> v, std::span<const double> x,
                             std::span<const double> y, std::span<const double> z,
                             const SmoothMaxParams& params) {
  const auto w = softmax_weights(v, params);
  detail::require_same_dim(v.size(), x, "directional_d3");
  detail::require_same_dim(v.size(), y, "directional_d3");
  detail::require_same_dim(v.size(), z, "directional_d3");
  const double mx = detail::weighted_mean(w, x);
  const double my = detail::weighted_mean(w, y);
  const double mz = detail::weighted_mean(w, z);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    acc += w[i] * (x[i] - mx) * (y[i] - my) * (z[i] - mz);
  const double k = params.kappa();
  return k * k * acc;
}

inline constexpr std::size_t kExplicitCoefficientCap = 8;

/// The b_ij and c_ijk tables of the explicit derivative formulas, stored in
/// max-shifted coordinates: exp_terms[i] = exp(k (v_i - max v)) and p is
/// their sum. Both sides of the weighted coefficient-sum inequalities scale by
/// the same power of exp(-k max v), so they can be checked in these units.
class CoefficientTables {
 public:
  CoefficientTables(std::vector<double> exp_terms, double p, std::vector<double> b,
                    std::vector<double> c)
      : e_(std::move(exp_terms)), p_(p), b_(std::move(b)), c_(std::move(c)) {}

  std::size_t dim() const { return e_.size(); }
  double p() const { return p_; }
  double exp_term(std::size_t i) const { return e_[i]; }
  double b(std::size_t i, std::size_t j) const { return b_[i * dim() + j]; }
  double c(std::size_t i, std::size_t j, std::size_t k) const {
    return c_[(i * dim() + j) * dim() + k];
  }

  /// sum_{i,j} e_i |b_ij|; bounded by 2 p^2.
  double weighted_abs_b_sum() const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i)
      for (std::size_t j = 0; j < dim(); ++j) s += e_[i] * std::abs(b(i, j));
    return s;
  }

  /// sum_{i,j,k} e_i |c_ijk|; bounded by 6 p^3.
  double weighted_abs_c_sum() const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i)
      for (std::size_t j = 0; j < dim(); ++j)
        for (std::size_t k = 0; k < dim(); ++k) s += e_[i] * std::abs(c(i, j, k));
    return s;
  }

 private:
  std::vector<double> e_;
  double p_;
  std::vector<double> b_;
  std::vector<double> c_;
};

/// Builds b and c from their case tables. O(d^3); refuses d above `max_dim`.
inline CoefficientTables explicit_coefficients(std::span<const double> v,
                                               const SmoothMaxParams& params,
                                               std::size_t max_dim = kExplicitCoefficientCap) {
  require_finite(v, "explicit_coefficients");
  const std::size_t d = v.size();
  if (d > max_dim)
    throw InputError("explicit_coefficients: d = " + std::to_string(d) +
                     " exceeds the small-d cap of " + std::to_string(max_dim));
  const double m = hard_max(v);
  std::vector<double> e(d);
  double p = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    e[i] = std::exp(params.kappa() * (v[i] - m));
    p += e[i];
  }
  std::vector<double> b(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) b[i * d + j] = (i == j) ? p - e[i] : -e[j];
  std::vector<double> c(d * d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) {
        double value;
        if (i == j || j == k)
          value = b[i * d + k] * (p - 2.0 * e[j]);
        else if (i == k)
          value = b[i * d + j] * (p - 2.0 * e[k]);
        else
          value = 2.0 * b[i * d + j] * b[i * d + k];
        c[(i * d + j) * d + k] = value;
      }
  return CoefficientTables(std::move(e), p, std::move(b), std::move(c));
}

/// Bounds on |S^(j)| over [0, 1] for the degree-7 smoothstep S, j = 1, 2, 3.
inline constexpr std::array<double, 3> kSmoothStepDerivativeMax{2.1875, 7.5131884043992927,
                                                                52.5};
/// D in |f^(j)(x)| <= D eps^{-j} 1{0 < x < eps}, j <= 3.
inline constexpr double kSmoothStepBound = 52.5;

/// f(x) = 1 - S(x / eps) on (0, eps), 1 to the left and 0 to the right, where
/// S(t) = 35t^4 - 84t^5 + 70t^6 - 20t^7. Nonincreasing and C^3.
class SmoothStep {
 public:
  explicit SmoothStep(double epsilon) : epsilon_(epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
      throw InputError("SmoothStep: epsilon must be positive and finite");
  }
  double epsilon() const { return epsilon_; }

  double operator()(double x, int order = 0) const {
    if (order < 0 || order > 3) throw InputError("smooth_step: order must be in 0..3");
    if (x <= 0.0) return order == 0 ? 1.0 : 0.0;
    if (x >= epsilon_) return 0.0;
    const double t = x / epsilon_;
    const double s = 1.0 - t;
    switch (order) {
      case 0:
        // 1 - S(t) = S(1 - t); evaluate the small side to keep the tails exact.
        return t <= 0.5 ? 1.0 - rise(t) : rise(s);
      case 1:
        return -140.0 * t * t * t * s * s * s / epsilon_;
      case 2:
        return -420.0 * t * t * s * s * (1.0 - 2.0 * t) / (epsilon_ * epsilon_);
      default:
        return -840.0 * t * s * (5.0 * t * t - 5.0 * t + 1.0) /
               (epsilon_ * epsilon_ * epsilon_);
    }
  }

 private:
  static double rise(double t) { return t * t * t * t * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t))); }

  double epsilon_;
};

inline double smooth_step(double x, const SmoothStep& spec, int order = 0) {
  return spec(x, order);
}

/// g_r(s) = f(G_k(s) - r).
inline double smoothed_indicator(std::span<const double> s, double r,
                                 const SmoothMaxParams& params, const SmoothStep& step) {
  return step(smooth_max(s, params) - r, 0);
}

}  // namespace maxmart
