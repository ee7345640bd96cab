// SPDX-License-Identifier: Apache-2.0
#pragma once

// Monte Carlo estimation of the conditional Kolmogorov distance between M(S)
// and M(T) on each F0 atom, DKW confidence bands, the smoothed-indicator
// diagnostic, and grid sweeps comparing empirical distances with the bounds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "maxmart/bounds.hpp"
#include "maxmart/errors.hpp"
#include "maxmart/gaussian.hpp"
#include "maxmart/martingale.hpp"
#include "maxmart/numeric.hpp"
#include "maxmart/parallel.hpp"
#include "maxmart/rng.hpp"
#include "maxmart/smooth_max.hpp"

namespace maxmart {

/// sqrt(ln(2/delta) / (2 N)).
inline double dkw_halfwidth(std::size_t replications, double delta) {
  if (replications == 0) throw InputError("dkw_halfwidth: replications must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("dkw_halfwidth: delta must lie in (0, 1)");
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(replications)));
}

/// sup_r |F_a(r) - F_b(r)| for two sorted samples, by a merged sweep. Ties
/// are consumed on both sides before the difference is taken, so the value
/// is exact for samples with atoms.
inline double ks_distance_sorted(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InputError("ks_distance: empty sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return best;
}

inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return ks_distance_sorted(a, b);
}

/// How M(T) is sampled: directly as M of N(0, V) draws, or as M of the
/// Y-path sums of the coupled paths. Both have the same law given the atom.
enum class TargetMode { direct, coupled };

inline std::string_view to_string(TargetMode m) { return m == TargetMode::direct ? "direct" : "coupled"; }

inline TargetMode parse_target_mode(std::string_view text) {
  if (text == "direct") return TargetMode::direct;
  if (text == "coupled") return TargetMode::coupled;
  throw InputError("unknown mc mode '" + std::string(text) + "' (expected direct or coupled)");
}

struct McOptions {
  TargetMode mode = TargetMode::direct;
  double delta = 0.01;
  unsigned threads = 1;
};

inline constexpr std::size_t kMinKolmogorovReplications = 1000;

/// Vectors S (from coupled paths) and T (per the mode) for one atom.
struct SampleVectors {
  std::vector<std::vector<double>> s;
  std::vector<std::vector<double>> t;
};

/// Replication k of S uses stream.split(0).split(k); direct T draw k uses
/// stream.split(1).split(k). Independent of the thread count.
inline SampleVectors draw_sample_vectors(const Scenario& sc, const AtomStatistics& stats,
                                         SeedStream stream, std::size_t reps_x, std::size_t reps_y,
                                         const McOptions& opts) {
  if (opts.mode == TargetMode::coupled && reps_x != reps_y)
    throw InputError("coupled mode reads T from the same paths: reps_y must equal reps_x");
  const CoupledSampler sampler(sc, stats);
  SampleVectors out;
  out.s.resize(reps_x);
  out.t.resize(reps_y);
  const SeedStream paths = stream.split(0);
  parallel_for(reps_x, opts.threads, [&](std::size_t k) {
    out.s[k] = sampler.sample_s(paths.split(k));
    if (opts.mode == TargetMode::coupled) out.t[k] = sampler.sample_t(paths.split(k));
  });
  if (opts.mode == TargetMode::direct) {
    const auto vs = variance_stats(stats.sigma_list);
    const GaussianSampler target(vs.V);
    const SeedStream draws = stream.split(1);
    parallel_for(reps_y, opts.threads, [&](std::size_t k) {
      CounterRng rng(draws.split(k));
      std::vector<double> t(sc.dim());
      target.draw(rng, t);
      out.t[k] = std::move(t);
    });
  }
  return out;
}

struct KolmogorovEstimate {
  std::string atom_label;
  double distance = 0.0;
  double band_halfwidth = 0.0;
  std::size_t replications_x = 0;
  std::size_t replications_y = 0;
};

/// Two-sample estimate of D_K(M(S), M(T) | atom) with the summed DKW band at
/// confidence 1 - delta.
inline KolmogorovEstimate estimate_kolmogorov(const Scenario& sc, const AtomStatistics& stats,
                                              SeedStream stream, std::size_t reps_x,
                                              std::size_t reps_y, const McOptions& opts = {}) {
  if (reps_x < kMinKolmogorovReplications || reps_y < kMinKolmogorovReplications)
    throw InputError("estimate_kolmogorov: replications must be at least " +
                     std::to_string(kMinKolmogorovReplications) + " per sample");
  variance_stats(stats.sigma_list);  // v_min > 0 precondition
  const auto samples = draw_sample_vectors(sc, stats, stream, reps_x, reps_y, opts);
  std::vector<double> ms(reps_x), mt(reps_y);
  for (std::size_t k = 0; k < reps_x; ++k) ms[k] = hard_max(samples.s[k]);
  for (std::size_t k = 0; k < reps_y; ++k) mt[k] = hard_max(samples.t[k]);
  KolmogorovEstimate est;
  est.atom_label = stats.label;
  est.distance = ks_distance(std::move(ms), std::move(mt));
  est.band_halfwidth = dkw_halfwidth(reps_x, opts.delta) + dkw_halfwidth(reps_y, opts.delta);
  est.replications_x = reps_x;
  est.replications_y = reps_y;
  return est;
}

namespace detail {

/// mean_k f(g_k - r) for sorted g: 1 below r, 0 from r + eps on.
inline double mean_smoothed_step(std::span<const double> sorted_g, double r, const SmoothStep& f) {
  const auto lo = std::upper_bound(sorted_g.begin(), sorted_g.end(), r);
  double total = static_cast<double>(lo - sorted_g.begin());
  for (auto it = lo; it != sorted_g.end() && *it < r + f.epsilon(); ++it) total += f(*it - r);
  return total / static_cast<double>(sorted_g.size());
}

}  // namespace detail

/// sup over an r-grid of |mean f(g_s - r) - mean f(g_t - r)|, where g_s and
/// g_t are smooth-max values. The grid covers [min g - pad, max g + pad] in
/// steps of eps/4 anchored at the left end, so a common shift of all samples
/// shifts the grid with them.
inline double smoothed_sup_difference(std::vector<double> g_s, std::vector<double> g_t,
                                      const SmoothStep& f, double pad) {
  if (g_s.empty() || g_t.empty()) throw InputError("smoothed_sup_difference: empty sample");
  std::sort(g_s.begin(), g_s.end());
  std::sort(g_t.begin(), g_t.end());
  const double lo = std::min(g_s.front(), g_t.front()) - pad;
  const double hi = std::max(g_s.back(), g_t.back()) + pad;
  const double step = f.epsilon() / 4.0;
  const auto points = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
  double best = 0.0;
  for (std::size_t k = 0; k < points; ++k) {
    const double r = lo + static_cast<double>(k) * step;
    best = std::max(best, std::abs(detail::mean_smoothed_step(g_s, r, f) -
                                   detail::mean_smoothed_step(g_t, r, f)));
  }
  return best;
}

struct SmoothedDiagnostic {
  double value = 0.0;
  SmoothingChoice smoothing;
};

/// Non-certified diagnostic for the smooth-function part of the distance
/// bound: sup_r |E g_r(S) - E g_r(T)| with g_r(s) = f(G_kappa(s) - r) and
/// (eps, delta, kappa) from optimal_epsilon. Requires d >= 2.
inline SmoothedDiagnostic smoothed_distance_diagnostic(const Scenario& sc, const AtomStatistics& stats,
                                                       SeedStream stream, std::size_t reps,
                                                       double alpha, const McOptions& opts = {}) {
  if (reps < kMinKolmogorovReplications)
    throw InputError("smoothed_distance_diagnostic: replications must be at least " +
                     std::to_string(kMinKolmogorovReplications));
  const auto choice = optimal_epsilon(bound_inputs(stats, alpha));
  const auto samples = draw_sample_vectors(sc, stats, stream, reps, reps, opts);
  const SmoothMaxParams params(choice.kappa);
  std::vector<double> gs(reps), gt(reps);
  for (std::size_t k = 0; k < reps; ++k) {
    gs[k] = smooth_max(samples.s[k], params);
    gt[k] = smooth_max(samples.t[k], params);
  }
  return {smoothed_sup_difference(std::move(gs), std::move(gt), SmoothStep(choice.epsilon),
                                  choice.epsilon + choice.delta),
          choice};
}

struct McConfig {
  std::size_t reps_x = 5000;
  std::size_t reps_y = 5000;
  std::uint64_t base_seed = 0;
  double delta = 0.01;
  TargetMode mode = TargetMode::direct;
  /// Histories / draws for Monte Carlo atom statistics.
  std::size_t stat_budget = 4000;
  unsigned threads = 1;
};

/// Stream for one (grid point, atom): keyed by kind, d, n and atom index
/// under the base seed. split(0) feeds statistics, split(1) the distance.
inline SeedStream point_stream(std::uint64_t base_seed, const ScenarioSpec& spec, std::size_t atom) {
  std::uint64_t key = mix64(static_cast<std::uint64_t>(spec.kind) + 1);
  key = mix64(key ^ spec.d);
  key = mix64(key ^ (spec.n * 0x9E3779B97F4A7C15ull));
  key = mix64(key ^ (atom + 0x5851F42D4C957F2Dull));
  return {base_seed, key};
}

struct SweepResult {
  ScenarioKind kind = ScenarioKind::iid_bounded;
  std::size_t d = 0;
  std::size_t n = 0;
  std::string atom;
  double atom_prob = 0.0;
  std::optional<AtomStatistics> stats;
  std::optional<BoundReport> bounds;
  std::optional<KolmogorovEstimate> kolmogorov;
  std::optional<double> implied_constant;
  double alpha = 0.0;
  double C = 1.0;
  std::uint64_t base_seed = 0;
  double runtime_s = 0.0;
  std::string error;
};

struct SweepOptions {
  double alpha = 0.0;
  double C = 1.0;
  /// false: statistics and bounds only (no distance estimate).
  bool simulate = true;
  /// Rows to skip, as returned by `key`.
  std::set<std::string> completed;
  std::function<std::string(const ScenarioSpec&, const std::string& atom, std::uint64_t seed)> key;
  std::function<void(const std::string&)> progress;
  /// Called with each finished row, in grid order.
  std::function<void(const SweepResult&)> on_row;
};

/// Evaluates every (grid point, atom): statistics, bound report, and (when
/// simulating) the Kolmogorov estimate with implied constant distance/bound
/// at C = 1. Failures are recorded in the row's error field. Results are
/// identical for any thread count.
inline std::vector<SweepResult> run_sweep(const std::vector<ScenarioSpec>& grid, const McConfig& mc,
                                          const SweepOptions& opts) {
  std::vector<SweepResult> rows;
  for (const auto& spec : grid) {
    std::optional<Scenario> sc;
    std::string scenario_error;
    try {
      sc = make_scenario(spec);
    } catch (const std::exception& e) {
      scenario_error = e.what();
    }
    const std::size_t atoms = sc ? sc->atom_count() : std::max<std::size_t>(1, spec.atoms.size());
    for (std::size_t w = 0; w < atoms; ++w) {
      SweepResult row;
      row.kind = spec.kind;
      row.d = spec.d;
      row.n = spec.n;
      row.atom = sc ? sc->atom(w).label : (spec.atoms.empty() ? "all" : spec.atoms[w].label);
      row.atom_prob = sc ? sc->atom(w).probability : (spec.atoms.empty() ? 1.0 : spec.atoms[w].probability);
      row.alpha = opts.alpha;
      row.C = opts.C;
      row.base_seed = mc.base_seed;
      if (opts.key && opts.completed.count(opts.key(spec, row.atom, mc.base_seed))) continue;
      if (opts.progress)
        opts.progress(std::string(to_string(spec.kind)) + " d=" + std::to_string(spec.d) +
                      " n=" + std::to_string(spec.n) + " atom=" + row.atom);
      const auto start = std::chrono::steady_clock::now();
      if (!sc) {
        row.error = scenario_error;
        if (opts.on_row) opts.on_row(row);
        rows.push_back(std::move(row));
        continue;
      }
      try {
        const SeedStream stream = point_stream(mc.base_seed, spec, w);
        row.stats = compute_atom_statistics(*sc, w, stream.split(0), mc.stat_budget, mc.threads);
        row.bounds = evaluate_bounds(bound_inputs(*row.stats, opts.alpha, opts.C));
        if (opts.simulate) {
          const McOptions mo{mc.mode, mc.delta, mc.threads};
          row.kolmogorov = estimate_kolmogorov(*sc, *row.stats, stream.split(1), mc.reps_x, mc.reps_y, mo);
          const double unit_bound = row.bounds->headline() / opts.C;
          if (unit_bound > 0.0) row.implied_constant = row.kolmogorov->distance / unit_bound;
        }
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      row.runtime_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (opts.on_row) opts.on_row(row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace maxmart
