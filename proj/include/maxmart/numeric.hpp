// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "maxmart/errors.hpp"

namespace maxmart {

/// Clamped logarithm 1 v ln(x).
inline double lnp(double x) { return x > std::numbers::e ? std::log(x) : 1.0; }

inline double max_norm(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

/// Hard maximum M(x) = max_j x_j.
inline double hard_max(std::span<const double> x) {
  if (x.empty()) throw InputError("hard_max: empty vector");
  return *std::max_element(x.begin(), x.end());
}

inline void require_finite(std::span<const double> x, const char* who) {
  if (x.empty()) throw InputError(std::string(who) + ": empty vector");
  for (double v : x)
    if (!std::isfinite(v)) throw InputError(std::string(who) + ": non-finite entry");
}

/// Standard normal cdf.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace maxmart
