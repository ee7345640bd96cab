// SPDX-License-Identifier: Apache-2.0
#pragma once

// Martingale-difference scenarios with a finite conditioning partition F0,
// the Gaussian coupling (X_i, Y_i) with Y_i ~ N(0, Sigma_i) drawn
// independently given the atom, and the per-atom statistics Sigma_i, beta and
// Gamma.
//
// Every increment is scaled by n^{-1/2}, so V = sum_i Sigma_i stays O(1).

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maxmart/errors.hpp"
#include "maxmart/gaussian.hpp"
#include "maxmart/numeric.hpp"
#include "maxmart/parallel.hpp"
#include "maxmart/rng.hpp"

namespace maxmart {

enum class ScenarioKind { iid_bounded, cond_indep_gaussian_mixture, markov_volatility };

inline std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::iid_bounded:
      return "iid_bounded";
    case ScenarioKind::cond_indep_gaussian_mixture:
      return "cond_indep_gaussian_mixture";
    case ScenarioKind::markov_volatility:
      return "markov_volatility";
  }
  return "?";
}

inline ScenarioKind parse_kind(std::string_view text) {
  for (auto kind : {ScenarioKind::iid_bounded, ScenarioKind::cond_indep_gaussian_mixture,
                    ScenarioKind::markov_volatility})
    if (text == to_string(kind)) return kind;
  throw InputError("unknown scenario kind '" + std::string(text) + "'");
}

/// One cell of the F0 partition.
struct F0Atom {
  std::string label;
  double probability = 1.0;
  /// markov_volatility: scale s_w of the innovations.
  double scale = 1.0;
  /// cond_indep_gaussian_mixture: Sigma(w); the step covariance is Sigma(w)/n.
  Eigen::MatrixXd covariance;
};

/// Plain description of a scenario; validated by make_scenario.
///
///  iid_bounded                  X_i = n^{-1/2} A xi_i, xi_i Rademacher vectors, one atom.
///  cond_indep_gaussian_mixture  X_i = n^{-1/2} L_w z_i given atom w, L_w L_w^T = Sigma(w),
///                               z_i iid coordinates N(0,1) truncated to [-R, R] and
///                               rescaled to unit variance (R = inf: exact Gaussian).
///  markov_volatility            X_i = n^{-1/2} s_w sqrt(h_i) A xi_i,
///                               h_i = 1 + a tanh(u^T X_{i-1}), X_0 = 0, |a| < 1.
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::iid_bounded;
  std::size_t d = 1;
  std::size_t n = 1;
  /// A; empty means identity.
  Eigen::MatrixXd mixing;
  double truncation_radius = std::numeric_limits<double>::infinity();
  double vol_coupling = 0.0;
  /// u; empty means (1, ..., 1) / sqrt(d).
  Eigen::VectorXd direction;
  /// Empty means the trivial partition (one atom of probability 1).
  std::vector<F0Atom> atoms;
};

class Scenario;
Scenario make_scenario(ScenarioSpec spec);

/// Immutable, validated scenario with the per-kind factors precomputed.
class Scenario {
 public:
  const ScenarioSpec& spec() const { return spec_; }
  ScenarioKind kind() const { return spec_.kind; }
  std::size_t dim() const { return spec_.d; }
  std::size_t steps() const { return spec_.n; }
  std::size_t atom_count() const { return spec_.atoms.size(); }
  const F0Atom& atom(std::size_t w) const {
    if (w >= atom_count()) throw InputError("scenario: atom index out of range");
    return spec_.atoms[w];
  }

  /// h_i given X_{i-1}; identically 1 except for markov_volatility.
  double volatility(std::span<const double> prev) const {
    if (spec_.kind != ScenarioKind::markov_volatility) return 1.0;
    double proj = 0.0;
    for (std::size_t j = 0; j < spec_.d; ++j) proj += direction_(static_cast<Eigen::Index>(j)) * prev[j];
    return 1.0 + spec_.vol_coupling * std::tanh(proj);
  }

  /// Draws X_i given the atom and X_{i-1} (`prev`; zeros for i = 1).
  void sample_increment(std::size_t w, std::span<const double> prev, CounterRng& rng,
                        std::span<double> out) const {
    const std::size_t d = spec_.d;
    const double root_n = std::sqrt(static_cast<double>(spec_.n));
    switch (spec_.kind) {
      case ScenarioKind::iid_bounded:
        apply_mixing_to_signs(rng, out, 1.0 / root_n);
        return;
      case ScenarioKind::markov_volatility: {
        const double h = volatility(prev);
        apply_mixing_to_signs(rng, out, atom(w).scale * std::sqrt(h) / root_n);
        return;
      }
      case ScenarioKind::cond_indep_gaussian_mixture: {
        const Eigen::MatrixXd& factor = atom_factors_[w];
        std::vector<double> z(d);
        for (double& zj : z) zj = truncated_unit_normal(rng);
        for (std::size_t i = 0; i < d; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < d; ++j)
            acc += factor(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * z[j];
          out[i] = acc / root_n;
        }
        return;
      }
    }
  }

  /// E[X_i X_i^T | F_{i-1}] in closed form given the atom and X_{i-1}.
  Eigen::MatrixXd conditional_covariance(std::size_t w, std::span<const double> prev) const {
    const double n = static_cast<double>(spec_.n);
    switch (spec_.kind) {
      case ScenarioKind::iid_bounded:
        return mixing_gram_ / n;
      case ScenarioKind::markov_volatility: {
        const double s = atom(w).scale;
        return volatility(prev) * s * s * mixing_gram_ / n;
      }
      case ScenarioKind::cond_indep_gaussian_mixture:
        return atom(w).covariance / n;
    }
    return {};
  }

  /// True when Sigma_i = E[X_i X_i^T | F0] is known in closed form.
  bool sigma_closed_form() const { return spec_.kind != ScenarioKind::markov_volatility; }

  const Eigen::MatrixXd& mixing() const { return mixing_; }
  /// A A^T.
  const Eigen::MatrixXd& mixing_gram() const { return mixing_gram_; }
  const Eigen::MatrixXd& atom_factor(std::size_t w) const { return atom_factors_.at(w); }
  /// Standard deviation of N(0,1) truncated to [-R, R] (1 for R = inf).
  double truncated_std() const { return truncated_std_; }

 private:
  friend Scenario make_scenario(ScenarioSpec spec);
  Scenario() = default;

  void apply_mixing_to_signs(CounterRng& rng, std::span<double> out, double factor) const {
    const std::size_t d = spec_.d;
    if (mixing_is_identity_) {
      for (std::size_t j = 0; j < d; ++j) out[j] = factor * rng.rademacher();
      return;
    }
    std::vector<double> xi(d);
    for (double& x : xi) x = rng.rademacher();
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j)
        acc += mixing_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * xi[j];
      out[i] = factor * acc;
    }
  }

  double truncated_unit_normal(CounterRng& rng) const {
    const double radius = spec_.truncation_radius;
    if (std::isinf(radius)) return rng.normal();
    double z = rng.normal();
    while (std::abs(z) > radius) z = rng.normal();
    return z / truncated_std_;
  }

  ScenarioSpec spec_;
  Eigen::MatrixXd mixing_;
  Eigen::MatrixXd mixing_gram_;
  bool mixing_is_identity_ = true;
  Eigen::VectorXd direction_;
  std::vector<Eigen::MatrixXd> atom_factors_;
  double truncated_std_ = 1.0;
};

/// Variance of N(0,1) conditioned on |Z| <= R.
inline double truncated_normal_variance(double radius) {
  if (std::isinf(radius)) return 1.0;
  const double mass = 2.0 * normal_cdf(radius) - 1.0;
  return 1.0 - 2.0 * radius * normal_pdf(radius) / mass;
}

inline Scenario make_scenario(ScenarioSpec spec) {
  if (spec.d == 0) throw InputError("scenario: d must be positive");
  if (spec.n == 0) throw InputError("scenario: n must be positive");
  const auto d = static_cast<Eigen::Index>(spec.d);
  const std::string kind_name(to_string(spec.kind));

  if (spec.atoms.empty()) spec.atoms.push_back(F0Atom{"all", 1.0, 1.0, {}});
  double total = 0.0;
  std::set<std::string> labels;
  for (const auto& a : spec.atoms) {
    if (a.label.empty()) throw InputError("scenario: atom label must be non-empty");
    if (!labels.insert(a.label).second)
      throw InputError("scenario: duplicate atom label '" + a.label + "'");
    if (!(a.probability > 0.0 && a.probability <= 1.0))
      throw InputError("scenario: atom '" + a.label + "' probability must be in (0, 1]");
    total += a.probability;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw InputError("scenario: atom probabilities must sum to 1");

  Scenario s;
  const bool uses_mixing = spec.kind != ScenarioKind::cond_indep_gaussian_mixture;
  if (spec.mixing.size() == 0) {
    s.mixing_ = Eigen::MatrixXd::Identity(d, d);
  } else {
    if (!uses_mixing)
      throw InputError("scenario: mixing matrix is not a parameter of " + kind_name);
    if (spec.mixing.rows() != d || spec.mixing.cols() != d)
      throw InputError("scenario: mixing matrix must be d x d");
    if (!spec.mixing.allFinite()) throw InputError("scenario: mixing matrix has non-finite entries");
    s.mixing_ = spec.mixing;
    s.mixing_is_identity_ = spec.mixing.isIdentity(0.0);
  }
  s.mixing_gram_ = s.mixing_ * s.mixing_.transpose();
  if (uses_mixing && !(s.mixing_gram_.diagonal().minCoeff() > 0.0))
    throw InputError("scenario: mixing matrix has a zero row (a coordinate with no variance)");

  if (spec.kind != ScenarioKind::cond_indep_gaussian_mixture &&
      !std::isinf(spec.truncation_radius))
    throw InputError("scenario: truncation_radius is not a parameter of " + kind_name);
  if (spec.kind != ScenarioKind::markov_volatility &&
      (spec.vol_coupling != 0.0 || spec.direction.size() != 0))
    throw InputError("scenario: vol_coupling/direction are parameters of markov_volatility only");

  switch (spec.kind) {
    case ScenarioKind::iid_bounded:
      if (spec.atoms.size() != 1)
        throw InputError("scenario: iid_bounded has a trivial F0 (exactly one atom)");
      if (spec.atoms[0].scale != 1.0 || spec.atoms[0].covariance.size() != 0)
        throw InputError("scenario: iid_bounded atoms take no scale or covariance");
      break;
    case ScenarioKind::cond_indep_gaussian_mixture: {
      if (!(spec.truncation_radius > 0.0))
        throw InputError("scenario: truncation_radius must be positive");
      s.truncated_std_ = std::sqrt(truncated_normal_variance(spec.truncation_radius));
      for (const auto& a : spec.atoms) {
        if (a.scale != 1.0) throw InputError("scenario: mixture atoms take a covariance, not a scale");
        if (a.covariance.rows() != d || a.covariance.cols() != d)
          throw InputError("scenario: atom '" + a.label + "' covariance must be d x d");
        const CovMatrix cov(a.covariance);
        cov.require_positive_diagonal("scenario atom covariance");
        const Eigen::LLT<Eigen::MatrixXd> llt(cov.matrix());
        if (llt.info() == Eigen::Success) {
          s.atom_factors_.push_back(llt.matrixL());
        } else {
          const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.matrix());
          s.atom_factors_.push_back(eig.eigenvectors() *
                                    eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
        }
      }
      break;
    }
    case ScenarioKind::markov_volatility:
      if (!(std::abs(spec.vol_coupling) < 1.0))
        throw InputError("scenario: markov_volatility requires |a| < 1");
      if (spec.direction.size() == 0) {
        s.direction_ = Eigen::VectorXd::Ones(d) / std::sqrt(static_cast<double>(spec.d));
      } else {
        if (spec.direction.size() != d) throw InputError("scenario: direction must have length d");
        if (!spec.direction.allFinite()) throw InputError("scenario: direction has non-finite entries");
        s.direction_ = spec.direction;
      }
      for (const auto& a : spec.atoms) {
        if (!(a.scale > 0.0) || !std::isfinite(a.scale))
          throw InputError("scenario: atom '" + a.label + "' scale must be positive");
        if (a.covariance.size() != 0)
          throw InputError("scenario: markov_volatility atoms take a scale, not a covariance");
      }
      break;
  }
  s.spec_ = std::move(spec);
  return s;
}

/// Per-atom quantities entering beta and Gamma.
struct AtomStatistics {
  std::size_t atom_index = 0;
  std::string label;
  double probability = 1.0;
  std::vector<CovMatrix> sigma_list;
  std::vector<double> sigma_bar_sq;
  std::vector<double> third_moments;
  double beta = 0.0;
  double beta_se = 0.0;
  double gamma = 0.0;
  double gamma_se = 0.0;
  bool sigma_analytic = true;
  bool third_moment_analytic = true;
  bool beta_analytic = true;
  std::size_t dim = 0;
  std::size_t steps = 0;
};

inline constexpr std::size_t kMinStatisticsBudget = 1000;
inline constexpr std::size_t kSignEnumerationCap = 12;

namespace detail {

struct ScalarEstimate {
  double value = 0.0;
  double std_error = 0.0;
  bool analytic = true;
};

/// E||A xi||_inf^3 over Rademacher xi: exact enumeration up to the cap,
/// otherwise Monte Carlo with `budget` draws.
inline ScalarEstimate mixed_sign_third_moment(const Scenario& sc, SeedStream stream,
                                              std::size_t budget) {
  const std::size_t d = sc.dim();
  const Eigen::MatrixXd& A = sc.mixing();
  const auto dd = static_cast<Eigen::Index>(d);
  if (d <= kSignEnumerationCap) {
    const std::uint64_t patterns = std::uint64_t{1} << d;
    double total = 0.0;
    Eigen::VectorXd xi(dd);
    for (std::uint64_t bits = 0; bits < patterns; ++bits) {
      for (Eigen::Index j = 0; j < dd; ++j) xi(j) = ((bits >> j) & 1u) ? 1.0 : -1.0;
      const double norm = (A * xi).cwiseAbs().maxCoeff();
      total += norm * norm * norm;
    }
    return {total / static_cast<double>(patterns), 0.0, true};
  }
  if (budget < kMinStatisticsBudget)
    throw InputError("atom statistics: mc_budget must be at least " +
                     std::to_string(kMinStatisticsBudget) + " for d > " +
                     std::to_string(kSignEnumerationCap));
  CounterRng rng(stream);
  Eigen::VectorXd xi(dd);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < budget; ++k) {
    for (Eigen::Index j = 0; j < dd; ++j) xi(j) = rng.rademacher();
    const double norm = (A * xi).cwiseAbs().maxCoeff();
    const double v = norm * norm * norm;
    const double delta = v - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (v - mean);
  }
  const double b = static_cast<double>(budget);
  return {mean, std::sqrt(m2 / (b - 1.0) / b), false};
}

/// E||L_w z||_inf^3 for the mixture innovation (unscaled by n).
inline ScalarEstimate mixture_third_moment(const Scenario& sc, std::size_t w, SeedStream stream,
                                           std::size_t budget) {
  const double radius = sc.spec().truncation_radius;
  if (sc.dim() == 1) {
    const double sd = std::sqrt(sc.atom(w).covariance(0, 0));
    double abs3;  // E|z|^3 for the standardized innovation
    if (std::isinf(radius)) {
      abs3 = 2.0 * std::sqrt(2.0 / std::numbers::pi);
    } else {
      const double mass = 2.0 * normal_cdf(radius) - 1.0;
      const double raw = 2.0 * (2.0 * normal_pdf(0.0) - (radius * radius + 2.0) * normal_pdf(radius)) / mass;
      const double t = sc.truncated_std();
      abs3 = raw / (t * t * t);
    }
    return {sd * sd * sd * abs3, 0.0, true};
  }
  if (budget < kMinStatisticsBudget)
    throw InputError("atom statistics: mc_budget must be at least " +
                     std::to_string(kMinStatisticsBudget) + " for the mixture third moment");
  // Draw n^{1/2} X_i directly through the scenario sampler.
  CounterRng rng(stream);
  std::vector<double> prev(sc.dim(), 0.0), x(sc.dim());
  const double root_n = std::sqrt(static_cast<double>(sc.steps()));
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < budget; ++k) {
    sc.sample_increment(w, prev, rng, x);
    const double norm = max_norm(x) * root_n;
    const double v = norm * norm * norm;
    const double delta = v - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (v - mean);
  }
  const double b = static_cast<double>(budget);
  return {mean, std::sqrt(m2 / (b - 1.0) / b), false};
}

inline constexpr std::size_t kHistoryBlock = 256;

}  // namespace detail

/// Sigma_i, sigma_bar_i^2, E[||X_i||^3 | F0], beta and Gamma for one atom.
///
/// iid_bounded and the mixture have F0-measurable conditional variances, so
/// beta = 0 exactly. For markov_volatility, E[h_i | F0] and E[h_i^{3/2} | F0]
/// come from `mc_budget` simulated histories (first pass), and beta from a
/// second pass over the same histories with the closed-form conditional
/// variance h_i s^2 AA^T / n. Standard errors are plain per-history ones
/// (delta method for Gamma). Deterministic in (scenario, atom, stream) for
/// any thread count.
inline AtomStatistics compute_atom_statistics(const Scenario& sc, std::size_t w, SeedStream stream,
                                              std::size_t mc_budget, unsigned threads = 1) {
  const F0Atom& atom = sc.atom(w);
  const std::size_t d = sc.dim();
  const std::size_t n = sc.steps();
  const double nd = static_cast<double>(n);
  const double ell = lnp(static_cast<double>(d));

  AtomStatistics st;
  st.atom_index = w;
  st.label = atom.label;
  st.probability = atom.probability;
  st.dim = d;
  st.steps = n;

  auto finish_constant = [&](const Eigen::MatrixXd& sigma, double third, double third_se) {
    const CovMatrix cov(sigma);
    st.sigma_list.assign(n, cov);
    st.sigma_bar_sq.assign(n, cov.max_variance());
    st.third_moments.assign(n, third);
    st.beta = 0.0;
    st.beta_se = 0.0;
    st.gamma = nd * (third + std::pow(cov.max_variance() * ell, 1.5));
    st.gamma_se = nd * third_se;
  };

  switch (sc.kind()) {
    case ScenarioKind::iid_bounded: {
      const auto k3 = detail::mixed_sign_third_moment(sc, stream.split(0), mc_budget);
      const double scale = std::pow(nd, -1.5);
      st.third_moment_analytic = k3.analytic;
      finish_constant(sc.mixing_gram() / nd, k3.value * scale, k3.std_error * scale);
      return st;
    }
    case ScenarioKind::cond_indep_gaussian_mixture: {
      const auto k3 = detail::mixture_third_moment(sc, w, stream.split(0), mc_budget);
      const double scale = std::pow(nd, -1.5);
      st.third_moment_analytic = k3.analytic;
      finish_constant(atom.covariance / nd, k3.value * scale, k3.std_error * scale);
      return st;
    }
    case ScenarioKind::markov_volatility:
      break;
  }

  if (mc_budget < kMinStatisticsBudget)
    throw InputError("atom statistics: mc_budget must be at least " +
                     std::to_string(kMinStatisticsBudget) + " for markov_volatility");
  st.sigma_analytic = false;
  st.beta_analytic = false;

  const auto k3 = detail::mixed_sign_third_moment(sc, stream.split(0), mc_budget);
  st.third_moment_analytic = false;
  const double s = atom.scale;
  const Eigen::MatrixXd base = s * s * sc.mixing_gram() / nd;
  const double c2 = base.diagonal().maxCoeff();  // sigma_bar_i^2 = E[h_i] c2
  const double c3 = s * s * s * k3.value * std::pow(nd, -1.5);
  const double cb = base.cwiseAbs().sum();

  const SeedStream histories = stream.split(1);
  const std::size_t blocks = (mc_budget + detail::kHistoryBlock - 1) / detail::kHistoryBlock;

  auto run_history = [&](std::size_t k, auto&& on_step) {
    CounterRng rng(histories.split(k));
    std::vector<double> prev(d, 0.0), x(d);
    for (std::size_t i = 0; i < n; ++i) {
      const double h = sc.volatility(prev);
      on_step(i, h);
      sc.sample_increment(w, prev, rng, x);
      prev.swap(x);
    }
  };
  auto block_range = [&](std::size_t b) {
    const std::size_t begin = b * detail::kHistoryBlock;
    return std::pair{begin, std::min(mc_budget, begin + detail::kHistoryBlock)};
  };

  // Pass 1: E[h_i | F0] and E[h_i^{3/2} | F0].
  std::vector<std::vector<double>> h_sums(blocks), h15_sums(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    std::vector<double> hs(n, 0.0), h15(n, 0.0);
    const auto [begin, end] = block_range(b);
    for (std::size_t k = begin; k < end; ++k)
      run_history(k, [&](std::size_t i, double h) {
        hs[i] += h;
        h15[i] += h * std::sqrt(h);
      });
    h_sums[b] = std::move(hs);
    h15_sums[b] = std::move(h15);
  });
  std::vector<double> mean_h(n, 0.0), mean_h15(n, 0.0);
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t i = 0; i < n; ++i) {
      mean_h[i] += h_sums[b][i];
      mean_h15[i] += h15_sums[b][i];
    }
  const double budget = static_cast<double>(mc_budget);
  for (std::size_t i = 0; i < n; ++i) {
    mean_h[i] /= budget;
    mean_h15[i] /= budget;
  }

  // Pass 2: per-history sum_i |h_i - E h_i| (beta) and the linearized Gamma
  // contribution (its standard error).
  std::vector<double> dev_linear(n);
  for (std::size_t i = 0; i < n; ++i) dev_linear[i] = 1.5 * std::sqrt(c2 * mean_h[i] * ell) * c2 * ell;
  struct Moments {
    double q = 0, q2 = 0, g = 0, g2 = 0;
  };
  std::vector<Moments> block_moments(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    Moments m;
    const auto [begin, end] = block_range(b);
    for (std::size_t k = begin; k < end; ++k) {
      double q = 0.0, g = 0.0;
      run_history(k, [&](std::size_t i, double h) {
        q += std::abs(h - mean_h[i]);
        g += c3 * h * std::sqrt(h) + dev_linear[i] * h;
      });
      m.q += q;
      m.q2 += q * q;
      m.g += g;
      m.g2 += g * g;
    }
    block_moments[b] = m;
  });
  Moments total;
  for (const auto& m : block_moments) {
    total.q += m.q;
    total.q2 += m.q2;
    total.g += m.g;
    total.g2 += m.g2;
  }
  auto std_error = [&](double sum, double sum_sq) {
    const double mean = sum / budget;
    const double var = std::max(0.0, (sum_sq - budget * mean * mean) / (budget - 1.0));
    return std::sqrt(var / budget);
  };

  st.sigma_list.reserve(n);
  st.gamma = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    st.sigma_list.emplace_back(mean_h[i] * base);
    st.sigma_bar_sq.push_back(st.sigma_list.back().max_variance());
    st.third_moments.push_back(c3 * mean_h15[i]);
    st.gamma += st.third_moments.back() + std::pow(st.sigma_bar_sq.back() * ell, 1.5);
  }
  st.beta = cb * total.q / budget;
  st.beta_se = cb * std_error(total.q, total.q2);
  const double third_total = c3 * std::accumulate(mean_h15.begin(), mean_h15.end(), 0.0);
  const double k3_rel = k3.value > 0.0 ? k3.std_error / k3.value : 0.0;
  st.gamma_se = std::hypot(std_error(total.g, total.g2), third_total * k3_rel);
  return st;
}

/// One realization of the coupling: X steps from the scenario law given the
/// atom, Y steps independent N(0, Sigma_i) given the atom.
struct CoupledPath {
  Eigen::MatrixXd x_steps;  // n x d
  Eigen::MatrixXd y_steps;  // n x d
  Eigen::VectorXd s;
  Eigen::VectorXd t;
  double max_s = 0.0;
  double max_t = 0.0;
};

/// Samples the coupled pair for one atom. X draws come from stream.split(0)
/// and Y draws from stream.split(1), so the S and T parts of a replication
/// are reproducible independently of each other.
class CoupledSampler {
 public:
  CoupledSampler(const Scenario& sc, const AtomStatistics& stats) : sc_(&sc), atom_(stats.atom_index) {
    if (stats.atom_index >= sc.atom_count() || stats.dim != sc.dim() || stats.steps != sc.steps() ||
        stats.sigma_list.size() != sc.steps())
      throw InputError("coupled sampler: statistics do not belong to this scenario/atom");
    const std::size_t n = sc.steps();
    step_sampler_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0 && stats.sigma_list[i].matrix() == stats.sigma_list[i - 1].matrix()) {
        step_sampler_[i] = step_sampler_[i - 1];
        continue;
      }
      step_sampler_[i] = samplers_.size();
      samplers_.emplace_back(stats.sigma_list[i]);
    }
  }

  std::size_t dim() const { return sc_->dim(); }
  std::size_t steps() const { return sc_->steps(); }

  CoupledPath sample(SeedStream stream) const {
    const std::size_t d = dim(), n = steps();
    const auto dd = static_cast<Eigen::Index>(d);
    CoupledPath path;
    path.x_steps.resize(static_cast<Eigen::Index>(n), dd);
    path.y_steps.resize(static_cast<Eigen::Index>(n), dd);
    CounterRng xrng(stream.split(0)), yrng(stream.split(1));
    std::vector<double> prev(d, 0.0), x(d), y(d);
    for (std::size_t i = 0; i < n; ++i) {
      sc_->sample_increment(atom_, prev, xrng, x);
      samplers_[step_sampler_[i]].draw(yrng, y);
      for (std::size_t j = 0; j < d; ++j) {
        path.x_steps(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[j];
        path.y_steps(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = y[j];
      }
      prev.swap(x);
    }
    path.s = column_sums(path.x_steps);
    path.t = column_sums(path.y_steps);
    path.max_s = path.s.maxCoeff();
    path.max_t = path.t.maxCoeff();
    return path;
  }

  /// S for the same replication as sample(stream), without storing steps.
  std::vector<double> sample_s(SeedStream stream) const {
    const std::size_t d = dim();
    CounterRng rng(stream.split(0));
    std::vector<double> prev(d, 0.0), x(d), s(d, 0.0);
    for (std::size_t i = 0; i < steps(); ++i) {
      sc_->sample_increment(atom_, prev, rng, x);
      for (std::size_t j = 0; j < d; ++j) s[j] += x[j];
      prev.swap(x);
    }
    return s;
  }

  /// T for the same replication as sample(stream), without storing steps.
  std::vector<double> sample_t(SeedStream stream) const {
    const std::size_t d = dim();
    CounterRng rng(stream.split(1));
    std::vector<double> y(d), t(d, 0.0);
    for (std::size_t i = 0; i < steps(); ++i) {
      samplers_[step_sampler_[i]].draw(rng, y);
      for (std::size_t j = 0; j < d; ++j) t[j] += y[j];
    }
    return t;
  }

  /// Sequential column sums in step order (matches sample_s/sample_t).
  static Eigen::VectorXd column_sums(const Eigen::MatrixXd& steps) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(steps.cols());
    for (Eigen::Index i = 0; i < steps.rows(); ++i)
      for (Eigen::Index j = 0; j < steps.cols(); ++j) out(j) += steps(i, j);
    return out;
  }

 private:
  const Scenario* sc_;
  std::size_t atom_;
  std::vector<GaussianSampler> samplers_;
  std::vector<std::size_t> step_sampler_;
};

inline CoupledPath sample_coupled_path(const Scenario& sc, const AtomStatistics& stats,
                                       SeedStream stream) {
  return CoupledSampler(sc, stats).sample(stream);
}

}  // namespace maxmart
