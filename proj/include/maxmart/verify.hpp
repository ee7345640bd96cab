// SPDX-License-Identifier: Apache-2.0
#pragma once

// Property suites run by `maxmart verify` and by the acceptance binary. Each
// suite reports the number of checks, the failures, and the worst ratio
// observed/allowed over all checks (a suite passes with ratio <= 1 and no
// failures).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "maxmart/bounds.hpp"
#include "maxmart/gaussian.hpp"
#include "maxmart/martingale.hpp"
#include "maxmart/mc_harness.hpp"
#include "maxmart/oracles.hpp"
#include "maxmart/parallel.hpp"
#include "maxmart/rng.hpp"
#include "maxmart/smooth_max.hpp"

namespace maxmart {

struct SuiteResult {
  std::string name;
  std::size_t checks = 0;
  std::size_t failures = 0;
  double worst_ratio = 0.0;
  std::string note;
  double seconds = 0.0;
  bool passed() const { return failures == 0; }

  /// Records observed <= allowed.
  void check(double observed, double allowed) {
    ++checks;
    const double ratio = allowed > 0.0 ? observed / allowed : (observed <= 0.0 ? 0.0 : INFINITY);
    if (!(observed <= allowed)) ++failures;
    if (!(ratio <= worst_ratio)) worst_ratio = std::isnan(ratio) ? INFINITY : ratio;
  }
  void require(bool ok) {
    ++checks;
    if (!ok) ++failures;
  }
};

struct VerifySettings {
  std::uint64_t seed = 1;
  std::vector<double> kappas{0.1, 1.0, 10.0, 100.0};
  /// Random instances for the sandwich, derivative and coefficient suites.
  std::size_t instances = 1000;
  /// Gaussian draws per grid point (moment and anti-concentration suites).
  std::size_t draws = 100000;
  /// Histories / draws per check in the martingale suite.
  std::size_t martingale_draws = 10000;
  unsigned threads = 1;
  std::size_t sandwich_max_dim = 1000;
  std::size_t fd_max_dim = 50;
  std::size_t explicit_max_dim = 6;
  std::size_t coefficient_max_dim = 8;
};

namespace verify_detail {

inline std::size_t random_dim(CounterRng& rng, std::size_t max_dim) {
  // Log-uniform on {1, ..., max_dim}, so small d is well represented.
  const double u = rng.uniform();
  const auto d = static_cast<std::size_t>(std::exp(u * std::log(static_cast<double>(max_dim) + 1.0)));
  return std::clamp<std::size_t>(d, 1, max_dim);
}

inline std::vector<double> random_vector(CounterRng& rng, std::size_t d, double scale) {
  std::vector<double> v(d);
  for (double& x : v) x = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

inline std::vector<double> unit_direction(CounterRng& rng, std::size_t d) {
  auto x = random_vector(rng, d, 1.0);
  const double m = max_norm(x);
  if (m == 0.0) x[0] = 1.0;
  else
    for (double& v : x) v /= m;
  return x;
}

inline double scaled_error(double value, double reference, double scale) {
  return std::abs(value - reference) / std::max(std::abs(reference), scale);
}

template <class F>
SuiteResult timed(const std::string& name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  SuiteResult r;
  r.name = name;
  body(r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace verify_detail

/// Scenarios whose statistics every suite and the Gamma-floor check cover.
inline std::vector<ScenarioSpec> scenario_catalog() {
  std::vector<ScenarioSpec> out;
  auto add = [&](ScenarioKind kind, std::size_t d, std::size_t n) -> ScenarioSpec& {
    ScenarioSpec s;
    s.kind = kind;
    s.d = d;
    s.n = n;
    out.push_back(std::move(s));
    return out.back();
  };
  add(ScenarioKind::iid_bounded, 1, 4);
  add(ScenarioKind::iid_bounded, 2, 64);
  add(ScenarioKind::iid_bounded, 8, 256);
  {
    Eigen::MatrixXd A(3, 3);
    A << 1.0, 0.5, 0.0, 0.0, 1.0, -0.3, 0.2, 0.0, 2.0;
    add(ScenarioKind::iid_bounded, 3, 16).mixing = A;
  }
  add(ScenarioKind::iid_bounded, 16, 32);
  for (double radius : {std::numeric_limits<double>::infinity(), 1.5}) {
    for (std::size_t d : {1u, 4u}) {
      auto& s = add(ScenarioKind::cond_indep_gaussian_mixture, d, 16);
      s.truncation_radius = radius;
      Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d), 0.5);
      corr.diagonal().setOnes();
      s.atoms = {F0Atom{"calm", 0.6, 1.0, corr},
                 F0Atom{"wild", 0.4, 1.0, 3.0 * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d),
                                                                           static_cast<Eigen::Index>(d))}};
    }
  }
  for (double a : {0.0, 0.5, -0.9}) {
    for (std::size_t d : {1u, 2u, 8u}) {
      auto& s = add(ScenarioKind::markov_volatility, d, 32);
      s.vol_coupling = a;
      s.atoms = {F0Atom{"low", 0.5, 1.0, {}}, F0Atom{"high", 0.5, 2.0, {}}};
    }
  }
  return out;
}

/// 0 <= G_k(x) - M(x) <= ln(d)/k + 1e-12.
inline SuiteResult verify_sandwich(const VerifySettings& s) {
  return verify_detail::timed("sandwich", [&](SuiteResult& r) {
    CounterRng rng({s.seed, 101});
    for (std::size_t k = 0; k < s.instances; ++k) {
      const std::size_t d = verify_detail::random_dim(rng, s.sandwich_max_dim);
      const double kappa = s.kappas[k % s.kappas.size()];
      const double scale = std::pow(10.0, -3.0 + 6.0 * rng.uniform());
      auto x = verify_detail::random_vector(rng, d, scale);
      if (k % 10 == 0) std::fill(x.begin(), x.end(), x[0]);  // all tied: the upper edge
      const double gap = smooth_max(x, SmoothMaxParams(kappa)) - hard_max(x);
      r.require(gap >= 0.0);
      r.check(gap, std::log(static_cast<double>(d)) / kappa + 1e-12);
    }
  });
}

/// Finite differences (d <= fd_max_dim, tolerance 1e-6), explicit coefficient
/// sums (d <= explicit_max_dim, tolerance 1e-10), and the derivative bounds.
/// Errors are relative to max(|reference|, k^{j-1} prod ||.||_inf).
inline SuiteResult verify_derivatives(const VerifySettings& s) {
  using verify_detail::scaled_error;
  return verify_detail::timed("derivatives", [&](SuiteResult& r) {
    CounterRng rng({s.seed, 102});
    for (std::size_t k = 0; k < s.instances; ++k) {
      const double kappa = s.kappas[k % s.kappas.size()];
      const SmoothMaxParams p(kappa);
      {
        const std::size_t d = verify_detail::random_dim(rng, s.fd_max_dim);
        const auto v = verify_detail::random_vector(rng, d, 2.0);
        const auto x = verify_detail::unit_direction(rng, d), y = verify_detail::unit_direction(rng, d),
                   z = verify_detail::unit_direction(rng, d);
        r.check(scaled_error(directional_d1(v, x, p), oracle::fd_d1(v, x, kappa), 1.0), 1e-6);
        r.check(scaled_error(directional_d2(v, x, y, p), oracle::fd_d2(v, x, y, kappa), kappa), 1e-6);
        r.check(scaled_error(directional_d3(v, x, y, z, p), oracle::fd_d3(v, x, y, z, kappa), kappa * kappa),
                1e-6);
        r.check(std::abs(directional_d1(v, x, p)), 1.0 + 1e-12);
        r.check(std::abs(directional_d2(v, x, y, p)), 2.0 * kappa * (1.0 + 1e-12));
        r.check(std::abs(directional_d3(v, x, y, z, p)), 6.0 * kappa * kappa * (1.0 + 1e-12));
      }
      {
        const std::size_t d = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(s.explicit_max_dim));
        const auto v = verify_detail::random_vector(rng, d, 2.0);
        const auto x = verify_detail::random_vector(rng, d, 1.0), y = verify_detail::random_vector(rng, d, 1.0),
                   z = verify_detail::random_vector(rng, d, 1.0);
        const auto t = explicit_coefficients(v, p, s.explicit_max_dim);
        const double sx = max_norm(x), sy = max_norm(y), sz = max_norm(z);
        r.check(scaled_error(directional_d2(v, x, y, p), oracle::explicit_d2(t, x, y, kappa), kappa * sx * sy),
                1e-10);
        r.check(scaled_error(directional_d3(v, x, y, z, p), oracle::explicit_d3(t, x, y, z, kappa),
                             kappa * kappa * sx * sy * sz),
                1e-10);
      }
    }
  });
}

/// sum_i e_i sum_j |b_ij| <= 2 p^2 and sum_i e_i sum_jk |c_ijk| <= 6 p^3.
inline SuiteResult verify_coefficients(const VerifySettings& s) {
  return verify_detail::timed("coefficients", [&](SuiteResult& r) {
    CounterRng rng({s.seed, 103});
    for (std::size_t k = 0; k < s.instances; ++k) {
      const std::size_t d =
          1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(s.coefficient_max_dim));
      const double kappa = s.kappas[k % s.kappas.size()];
      const auto v = verify_detail::random_vector(rng, d, 3.0);
      const auto t = explicit_coefficients(v, SmoothMaxParams(kappa), s.coefficient_max_dim);
      const double p = t.p();
      r.check(t.weighted_abs_b_sum(), 2.0 * p * p * (1.0 + 1e-14));
      r.check(t.weighted_abs_c_sum(), 6.0 * p * p * p * (1.0 + 1e-14));
    }
  });
}

/// E||Y||_inf^r (estimate minus 3 standard errors) against the explicit
/// bound, Y ~ N(0, sigma^2 I_p).
inline SuiteResult verify_moment_bound(const VerifySettings& s) {
  return verify_detail::timed("moment_bound", [&](SuiteResult& r) {
    struct Point {
      std::size_t p;
      double r, sigma;
      MomentEstimate est;
    };
    std::vector<Point> grid;
    for (std::size_t p : {1u, 10u, 100u})
      for (double order : {2.0, 3.0})
        for (double sigma : {0.5, 1.0, 2.0}) grid.push_back({p, order, sigma, {}});
    parallel_for(grid.size(), s.threads, [&](std::size_t k) {
      auto& g = grid[k];
      const CovMatrix cov(g.sigma * g.sigma *
                          Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(g.p), static_cast<Eigen::Index>(g.p)));
      g.est = estimate_max_moment(cov, g.r, SeedStream{s.seed, 104}.split(k), s.draws);
    });
    double tightest = 0.0;
    for (const auto& g : grid) {
      const double bound = max_moment_bound(g.r, g.sigma, g.p);
      r.check(g.est.estimate - 3.0 * g.est.std_error, bound);
      tightest = std::max(tightest, g.est.estimate / bound);
    }
    std::ostringstream note;
    note << "largest estimate/bound " << tightest;
    r.note = note.str();
  });
}

struct LevyGridPoint {
  std::size_t d = 0;
  double epsilon = 0.0;
  double estimate = 0.0;
  double halfwidth = 0.0;
  double implied_constant = 0.0;
};

/// Implied anti-concentration constants over d in {2, 10, 100} and
/// eps in {0.01, 0.1} for equicorrelated (rho = 0.5) unit-variance Y.
inline std::vector<LevyGridPoint> levy_implied_constants(const VerifySettings& s) {
  std::vector<LevyGridPoint> grid;
  for (double eps : {0.01, 0.1})
    for (std::size_t d : {2u, 10u, 100u}) grid.push_back({d, eps, 0, 0, 0});
  parallel_for(grid.size(), s.threads, [&](std::size_t k) {
    auto& g = grid[k];
    const auto cov = CovMatrix::equicorrelated(g.d, 0.5);
    const auto est = estimate_levy_concentration(cov, g.epsilon, SeedStream{s.seed, 105}.split(k), s.draws);
    g.estimate = est.estimate;
    g.halfwidth = est.halfwidth;
    g.implied_constant = est.estimate / anti_concentration_value(g.epsilon, 1.0, 1.0, g.d, 1.0);
  });
  return grid;
}

/// Implied constants finite, and within a factor 3 across d for each eps.
inline SuiteResult verify_anti_concentration(const VerifySettings& s) {
  return verify_detail::timed("anti_concentration", [&](SuiteResult& r) {
    const auto grid = levy_implied_constants(s);
    std::ostringstream note;
    for (double eps : {0.01, 0.1}) {
      double lo = INFINITY, hi = 0.0;
      for (const auto& g : grid) {
        if (g.epsilon != eps) continue;
        r.require(std::isfinite(g.implied_constant) && g.implied_constant > 0.0);
        lo = std::min(lo, g.implied_constant);
        hi = std::max(hi, g.implied_constant);
        note << "C(d=" << g.d << ",eps=" << eps << ")=" << g.implied_constant << " ";
      }
      r.check(hi / lo, 3.0);
    }
    r.note = note.str();
  });
}

/// For every catalog scenario and atom: E[X_i | F_{i-1}] = 0 at two fixed
/// histories, and the declared Sigma_n matches simulated second moments,
/// each within 4 standard errors (doubled when Sigma is itself simulated).
inline SuiteResult verify_martingale(const VerifySettings& s) {
  return verify_detail::timed("martingale", [&](SuiteResult& r) {
    const auto catalog = scenario_catalog();
    std::vector<SuiteResult> parts(catalog.size());
    parallel_for(catalog.size(), s.threads, [&](std::size_t c) {
      auto& part = parts[c];
      const auto sc = make_scenario(catalog[c]);
      const std::size_t d = sc.dim(), n = sc.steps();
      const auto count = static_cast<double>(s.martingale_draws);
      for (std::size_t w = 0; w < sc.atom_count(); ++w) {
        const SeedStream base = SeedStream{s.seed, 106}.split(c).split(w);
        for (double level : {0.0, 2.0}) {
          const std::vector<double> prev(d, level / std::sqrt(static_cast<double>(n)));
          CounterRng rng(base.split(level == 0.0 ? 0 : 1));
          std::vector<double> x(d), sum(d, 0.0), sum_sq(d, 0.0);
          for (std::size_t k = 0; k < s.martingale_draws; ++k) {
            sc.sample_increment(w, prev, rng, x);
            for (std::size_t j = 0; j < d; ++j) {
              sum[j] += x[j];
              sum_sq[j] += x[j] * x[j];
            }
          }
          for (std::size_t j = 0; j < d; ++j) {
            const double mean = sum[j] / count;
            const double se = std::sqrt(std::max(0.0, sum_sq[j] / count - mean * mean) / count);
            part.check(std::abs(mean), 4.0 * se);
          }
        }
        if (d > 4) continue;
        const auto stats = compute_atom_statistics(sc, w, base.split(2), s.martingale_draws);
        CounterRng rng(base.split(3));
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        Eigen::MatrixXd sum_sq = sum;
        std::vector<double> prev(d), x(d);
        for (std::size_t k = 0; k < s.martingale_draws; ++k) {
          std::fill(prev.begin(), prev.end(), 0.0);
          for (std::size_t i = 0; i < n; ++i) {
            sc.sample_increment(w, prev, rng, x);
            if (i + 1 < n) prev.swap(x);
          }
          for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) {
              const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
              sum(ia, ib) += x[a] * x[b];
              sum_sq(ia, ib) += x[a] * x[a] * x[b] * x[b];
            }
        }
        const Eigen::MatrixXd& declared = stats.sigma_list.back().matrix();
        const double factor = stats.sigma_analytic ? 4.0 : 8.0;
        for (Eigen::Index a = 0; a < declared.rows(); ++a)
          for (Eigen::Index b = 0; b < declared.cols(); ++b) {
            const double mean = sum(a, b) / count;
            const double se = std::sqrt(std::max(0.0, sum_sq(a, b) / count - mean * mean) / count);
            part.check(std::abs(mean - declared(a, b)), factor * se + 1e-15);
          }
      }
    });
    for (const auto& p : parts) {
      r.checks += p.checks;
      r.failures += p.failures;
      r.worst_ratio = std::max(r.worst_ratio, p.worst_ratio);
    }
    r.note = std::to_string(catalog.size()) + " scenarios";
  });
}

/// Gamma >= (lnp d)^{3/2} n^{-1/2} v_max^3 for every catalog scenario/atom.
inline SuiteResult verify_gamma_floor(const VerifySettings& s) {
  return verify_detail::timed("gamma_floor", [&](SuiteResult& r) {
    const auto catalog = scenario_catalog();
    std::size_t atoms = 0;
    for (std::size_t c = 0; c < catalog.size(); ++c) {
      const auto sc = make_scenario(catalog[c]);
      for (std::size_t w = 0; w < sc.atom_count(); ++w) {
        ++atoms;
        const auto st =
            compute_atom_statistics(sc, w, SeedStream{s.seed, 107}.split(c).split(w), 4000, s.threads);
        const auto vs = variance_stats(st.sigma_list);
        const double floor = std::pow(lnp(static_cast<double>(st.dim)), 1.5) /
                             std::sqrt(static_cast<double>(st.steps)) * std::pow(vs.v_max_sq, 1.5);
        r.require(gamma_floor_check(st.gamma, st.dim, st.steps, vs.v_max_sq));
        r.check(floor, st.gamma + 1e-12);
      }
    }
    r.note = std::to_string(atoms) + " atoms";
  });
}

inline SuiteResult run_suite(const std::string& name, const VerifySettings& s) {
  if (name == "sandwich") return verify_sandwich(s);
  if (name == "derivatives") return verify_derivatives(s);
  if (name == "coefficients") return verify_coefficients(s);
  if (name == "moment_bound") return verify_moment_bound(s);
  if (name == "anti_concentration") return verify_anti_concentration(s);
  if (name == "martingale") return verify_martingale(s);
  if (name == "gamma_floor") return verify_gamma_floor(s);
  throw InputError("unknown verify suite '" + name + "'");
}

}  // namespace maxmart
