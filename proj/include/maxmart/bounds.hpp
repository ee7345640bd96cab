// SPDX-License-Identifier: Apache-2.0
#pragma once

// Berry-Esseen bound evaluation for the maximum of a vector martingale:
// normalized ingredients (tau, beta', Gamma') from V = sum_i Sigma_i, the
// general bound, the bound for F0-measurable conditional variances, the
// one-dimensional bound, and the smoothing parameters used in its proof.
//
// The universal constant C is never known; every value here is linear in C
// and callers usually pass C = 1 and report distance / bound.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maxmart/errors.hpp"
#include "maxmart/gaussian.hpp"
#include "maxmart/martingale.hpp"
#include "maxmart/numeric.hpp"

namespace maxmart {

struct VarianceStats {
  CovMatrix V;
  double v_min_sq = 0.0;
  double v_max_sq = 0.0;
  double tau = 1.0;
};

/// V = sum_i Sigma_i and its diagonal extremes. Requires min_j V_jj > 0.
inline VarianceStats variance_stats(std::span<const CovMatrix> sigma_list) {
  if (sigma_list.empty()) throw InputError("variance_stats: empty Sigma list");
  const auto d = static_cast<Eigen::Index>(sigma_list.front().dim());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  for (const auto& s : sigma_list) {
    if (static_cast<Eigen::Index>(s.dim()) != d)
      throw InputError("variance_stats: Sigma_i of unequal dimension");
    sum += s.matrix();
  }
  CovMatrix V(std::move(sum));
  const double lo = V.min_variance();
  const double hi = V.max_variance();
  if (!(lo > 0.0))
    throw PreconditionError(
        "precondition violated: the bound requires v_min > 0, but the smallest diagonal entry "
        "of V = sum_i Sigma_i is " + std::to_string(lo));
  return {std::move(V), lo, hi, std::sqrt(hi / lo)};
}

struct BoundInputs {
  std::size_t d = 2;
  std::size_t n = 1;
  double v_min_sq = 1.0;
  double v_max_sq = 1.0;
  double beta = 0.0;
  double gamma = 1.0;
  double alpha = 0.0;
  double C = 1.0;

  void validate() const {
    if (d == 0 || n == 0) throw InputError("bound inputs: d and n must be positive");
    if (!(v_min_sq > 0.0))
      throw PreconditionError("precondition violated: the bound requires v_min > 0");
    if (!(v_max_sq >= v_min_sq)) throw InputError("bound inputs: v_min_sq exceeds v_max_sq");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw InputError("bound inputs: beta must be >= 0");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InputError("bound inputs: gamma must be > 0");
    if (!(alpha >= 0.0 && alpha <= 0.25)) throw InputError("bound inputs: alpha must lie in [0, 1/4]");
    if (!(C > 0.0) || !std::isfinite(C)) throw InputError("bound inputs: C must be positive");
  }

  double v_min() const { return std::sqrt(v_min_sq); }
  double v_max() const { return std::sqrt(v_max_sq); }
  double tau() const { return std::sqrt(v_max_sq / v_min_sq); }
  double beta_prime() const { return beta / v_min_sq; }
  double gamma_prime() const { return gamma / (v_min_sq * v_min()); }
};

inline BoundInputs bound_inputs(const AtomStatistics& stats, double alpha, double C = 1.0) {
  const auto vs = variance_stats(stats.sigma_list);
  BoundInputs in{stats.dim, stats.steps, vs.v_min_sq, vs.v_max_sq, stats.beta, stats.gamma, alpha, C};
  in.validate();
  return in;
}

/// The two summands of the general bound:
///   C (ln d)^alpha beta' sqrt(tau / Gamma')  and  C (ln dn)^{1 - alpha/2} (tau^3 Gamma')^{1/4}.
struct Theorem1Terms {
  double variance_term = 0.0;
  double third_moment_term = 0.0;
  double total() const { return variance_term + third_moment_term; }
};

inline Theorem1Terms theorem1_terms(const BoundInputs& in) {
  in.validate();
  if (in.d < 2)
    throw InputError("theorem1_bound: d = 1 makes ln d = 0; use d1_bound for the scalar case");
  const double ln_d = std::log(static_cast<double>(in.d));
  const double ln_dn = std::log(static_cast<double>(in.d) * static_cast<double>(in.n));
  const double tau = in.tau();
  const double gp = in.gamma_prime();
  return {in.C * std::pow(ln_d, in.alpha) * in.beta_prime() * std::sqrt(tau / gp),
          in.C * std::pow(ln_dn, 1.0 - in.alpha / 2.0) * std::pow(tau * tau * tau * gp, 0.25)};
}

inline double theorem1_bound(const BoundInputs& in) { return theorem1_terms(in).total(); }

/// C (ln dn)^{7/8} (tau^3 Gamma')^{1/4}; valid when the conditional variances
/// are F0-measurable, i.e. beta = 0 (see corollary_applies).
inline double corollary_bound(const BoundInputs& in) {
  in.validate();
  const double ln_dn = std::log(static_cast<double>(in.d) * static_cast<double>(in.n));
  return in.C * std::pow(ln_dn, 7.0 / 8.0) * std::pow(std::pow(in.tau(), 3) * in.gamma_prime(), 0.25);
}

inline bool corollary_applies(const BoundInputs& in) { return in.beta == 0.0; }

/// C [beta' Gamma'^{-1/2} + Gamma'^{1/4}] for d = 1.
inline double d1_bound(double beta_prime, double gamma_prime, double C = 1.0) {
  if (!(gamma_prime > 0.0)) throw InputError("d1_bound: Gamma' must be positive");
  if (!(beta_prime >= 0.0)) throw InputError("d1_bound: beta' must be nonnegative");
  return C * (beta_prime / std::sqrt(gamma_prime) + std::pow(gamma_prime, 0.25));
}

struct SmoothingChoice {
  double epsilon = 0.0;
  double delta = 0.0;
  double kappa = 0.0;
};

/// eps = (ln d)^{(1-alpha)/2} v_min (Gamma'/tau)^{1/4}, delta = eps,
/// kappa = ln d / delta.
inline SmoothingChoice optimal_epsilon(const BoundInputs& in) {
  in.validate();
  if (in.d < 2) throw InputError("optimal_epsilon: requires d >= 2");
  const double ln_d = std::log(static_cast<double>(in.d));
  const double eps =
      std::pow(ln_d, (1.0 - in.alpha) / 2.0) * in.v_min() * std::pow(in.gamma_prime() / in.tau(), 0.25);
  return {eps, eps, ln_d / eps};
}

/// Gamma >= (lnp d)^{3/2} n^{-1/2} v_max^3, with 1e-12 absolute slack.
inline bool gamma_floor_check(double gamma, std::size_t d, std::size_t n, double v_max_sq) {
  const double floor = std::pow(lnp(static_cast<double>(d)), 1.5) /
                       std::sqrt(static_cast<double>(n)) * std::pow(v_max_sq, 1.5);
  return gamma >= floor - 1e-12;
}

struct BoundReport {
  double v_min = 0.0;
  double v_max = 0.0;
  double tau = 1.0;
  double beta_prime = 0.0;
  double gamma_prime = 0.0;
  std::optional<Theorem1Terms> theorem1_terms;
  std::optional<double> theorem1_value;
  std::optional<double> corollary_value;
  std::optional<double> d1_value;
  std::optional<SmoothingChoice> smoothing;
  bool gamma_floor_ok = false;
  /// beta > 0: the corollary hypothesis fails and corollary_value is unset.
  bool corollary_not_applicable = false;
  /// d = 2: ln d < 1 enters the first summand as printed (not clamped).
  bool ln_d_below_one = false;

  /// The value a distance is compared against: theorem1 for d >= 2, d1 otherwise.
  double headline() const { return theorem1_value ? *theorem1_value : d1_value.value_or(0.0); }
};

inline BoundReport evaluate_bounds(const BoundInputs& in) {
  in.validate();
  BoundReport r;
  r.v_min = in.v_min();
  r.v_max = in.v_max();
  r.tau = in.tau();
  r.beta_prime = in.beta_prime();
  r.gamma_prime = in.gamma_prime();
  r.gamma_floor_ok = gamma_floor_check(in.gamma, in.d, in.n, in.v_max_sq);
  if (in.d == 1) {
    r.d1_value = d1_bound(r.beta_prime, r.gamma_prime, in.C);
    return r;
  }
  r.theorem1_terms = theorem1_terms(in);
  r.theorem1_value = r.theorem1_terms->total();
  if (corollary_applies(in))
    r.corollary_value = corollary_bound(in);
  else
    r.corollary_not_applicable = true;
  r.smoothing = optimal_epsilon(in);
  r.ln_d_below_one = in.d == 2;
  return r;
}

}  // namespace maxmart
