// SPDX-License-Identifier: Apache-2.0
#pragma once

// Covariance matrices, Gaussian sampling, and the two Gaussian maximum
// inequalities (anti-concentration and the max-norm moment bound) in both
// closed form and Monte Carlo form.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "maxmart/errors.hpp"
#include "maxmart/numeric.hpp"
#include "maxmart/rng.hpp"

namespace maxmart {

inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kSymmetryTolerance = 1e-12;

/// Symmetric positive-semidefinite d x d matrix. Validated on construction:
/// asymmetry above 1e-12 (relative) or an eigenvalue below -1e-10 * max|entry|
/// is rejected. The stored matrix is exactly symmetric.
class CovMatrix {
 public:
  explicit CovMatrix(Eigen::MatrixXd entries) : m_(std::move(entries)) {
    if (m_.rows() == 0 || m_.rows() != m_.cols())
      throw InputError("CovMatrix: matrix must be square and non-empty");
    if (!m_.allFinite()) throw InputError("CovMatrix: non-finite entry");
    const double scale = m_.cwiseAbs().maxCoeff();
    const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance * std::max(scale, 1e-300))
      throw InputError("CovMatrix: matrix is not symmetric");
    m_ = 0.5 * (m_ + m_.transpose());
    if (scale > 0.0) {
      const double smallest =
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m_, Eigen::EigenvaluesOnly)
              .eigenvalues()
              .minCoeff();
      if (smallest < -kPsdTolerance * scale) {
        std::ostringstream msg;
        msg << "CovMatrix: not positive semidefinite (smallest eigenvalue " << smallest << ")";
        throw InputError(msg.str());
      }
    }
  }

  static CovMatrix identity(std::size_t d) {
    return CovMatrix(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d),
                                               static_cast<Eigen::Index>(d)));
  }

  /// Unit variances with common correlation rho.
  static CovMatrix equicorrelated(std::size_t d, double rho) {
    const auto n = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, rho);
    m.diagonal().setOnes();
    return CovMatrix(std::move(m));
  }

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(std::size_t i, std::size_t j) const {
    return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  double min_variance() const { return m_.diagonal().minCoeff(); }
  double max_variance() const { return m_.diagonal().maxCoeff(); }
  double min_std() const { return std::sqrt(min_variance()); }
  double max_std() const { return std::sqrt(max_variance()); }

  void require_positive_diagonal(const char* who) const {
    if (!(min_variance() > 0.0))
      throw InputError(std::string(who) + ": covariance diagonal must be strictly positive");
  }

 private:
  Eigen::MatrixXd m_;
};

/// Draws N(0, cov) vectors as factor * z with z standard normal. The factor
/// is the Cholesky factor when it exists, otherwise Q diag(sqrt(max(l, 0)))
/// from the symmetric eigendecomposition (recorded in warning()).
class GaussianSampler {
 public:
  explicit GaussianSampler(const CovMatrix& cov) {
    const Eigen::LLT<Eigen::MatrixXd> llt(cov.matrix());
    if (llt.info() == Eigen::Success) {
      factor_ = llt.matrixL();
      lower_triangular_ = true;
      return;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.matrix());
    Eigen::VectorXd roots = eig.eigenvalues();
    double clipped = 0.0;
    for (Eigen::Index i = 0; i < roots.size(); ++i) {
      if (roots(i) < 0.0) clipped = std::min(clipped, roots(i));
      roots(i) = std::sqrt(std::max(roots(i), 0.0));
    }
    factor_ = eig.eigenvectors() * roots.asDiagonal();
    std::ostringstream msg;
    msg << "Cholesky factorization failed; used eigendecomposition";
    if (clipped < 0.0) msg << " with negative eigenvalues clipped (most negative " << clipped << ")";
    warning_ = msg.str();
  }

  std::size_t dim() const { return static_cast<std::size_t>(factor_.rows()); }
  const std::string& warning() const { return warning_; }
  bool used_eigen_fallback() const { return !warning_.empty(); }

  /// One draw into `out` (length dim()). Safe to call concurrently.
  void draw(CounterRng& rng, std::span<double> out) const {
    const auto d = factor_.rows();
    for (Eigen::Index i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] = rng.normal();
    if (lower_triangular_) {
      // Bottom-up so that z_j, j <= i, is still intact when row i is formed.
      for (Eigen::Index i = d - 1; i >= 0; --i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j <= i; ++j) acc += factor_(i, j) * out[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = acc;
      }
      return;
    }
    const std::vector<double> z(out.begin(), out.end());
    for (Eigen::Index i = 0; i < d; ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) acc += factor_(i, j) * z[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(i)] = acc;
    }
  }

 private:
  Eigen::MatrixXd factor_;
  bool lower_triangular_ = false;
  std::string warning_;
};

/// `count` i.i.d. rows from N(0, cov), drawn sequentially from one stream.
inline Eigen::MatrixXd sample_gaussian(const CovMatrix& cov, SeedStream stream, std::size_t count) {
  if (count == 0) throw InputError("sample_gaussian: count must be positive");
  const GaussianSampler sampler(cov);
  CounterRng rng(stream);
  const auto d = static_cast<Eigen::Index>(cov.dim());
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(count), d);
  std::vector<double> buf(cov.dim());
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    sampler.draw(rng, buf);
    for (Eigen::Index j = 0; j < d; ++j) rows(r, j) = buf[static_cast<std::size_t>(j)];
  }
  return rows;
}

/// C eps (sigma_max / sigma_min^2) sqrt(lnp(sigma_min d / eps)).
inline double anti_concentration_value(double epsilon, double sigma_min, double sigma_max,
                                       std::size_t d, double C = 1.0) {
  if (!(epsilon > 0.0) || !(sigma_min > 0.0) || !(sigma_max > 0.0) || d == 0 || !(C > 0.0))
    throw InputError("anti_concentration_value: inputs must be positive");
  if (sigma_min > sigma_max)
    throw InputError("anti_concentration_value: sigma_min exceeds sigma_max");
  return C * epsilon * (sigma_max / (sigma_min * sigma_min)) *
         std::sqrt(lnp(sigma_min * static_cast<double>(d) / epsilon));
}

/// Largest fraction of `sorted` lying in a closed window of length 2 eps,
/// i.e. sup_r of the empirical measure of [r - eps, r + eps]. Two-pointer
/// sweep; the supremum is attained with the left edge on a sample point.
inline double max_window_fraction(std::span<const double> sorted, double epsilon) {
  if (sorted.empty()) throw InputError("max_window_fraction: empty sample");
  std::size_t best = 0;
  std::size_t hi = 0;
  for (std::size_t lo = 0; lo < sorted.size(); ++lo) {
    if (hi < lo) hi = lo;
    while (hi < sorted.size() && sorted[hi] <= sorted[lo] + 2.0 * epsilon) ++hi;
    best = std::max(best, hi - lo);
  }
  return static_cast<double>(best) / static_cast<double>(sorted.size());
}

struct LevyEstimate {
  double estimate = 0.0;
  double halfwidth = 0.0;
};

inline constexpr std::size_t kMinLevyReplications = 100;

/// Monte Carlo estimate of sup_r P(|M(Y) - r| <= eps) for Y ~ N(0, cov).
/// The halfwidth is twice the 95% DKW halfwidth (a window is a difference of
/// two cdf values).
inline LevyEstimate estimate_levy_concentration(const CovMatrix& cov, double epsilon,
                                                SeedStream stream, std::size_t replications) {
  if (replications < kMinLevyReplications)
    throw InputError("estimate_levy_concentration: replications must be at least " +
                     std::to_string(kMinLevyReplications));
  if (!(epsilon >= 0.0)) throw InputError("estimate_levy_concentration: epsilon must be >= 0");
  cov.require_positive_diagonal("estimate_levy_concentration");
  const GaussianSampler sampler(cov);
  CounterRng rng(stream);
  std::vector<double> buf(cov.dim());
  std::vector<double> maxima(replications);
  for (auto& m : maxima) {
    sampler.draw(rng, buf);
    m = hard_max(buf);
  }
  std::sort(maxima.begin(), maxima.end());
  const double reps = static_cast<double>(replications);
  return {max_window_fraction(maxima, epsilon),
          2.0 * std::sqrt(std::log(2.0 / 0.05) / (2.0 * reps))};
}

/// [ln(sqrt(2) e^{c_r} p)]^{r/2} (2 sigma_max)^r with c_r = r/2 - 1: the
/// explicit form of E||Y||_inf^r <= C_r sigma_max^r (lnp p)^{r/2}.
inline double max_moment_bound(double r, double sigma_max, std::size_t p) {
  if (!(r >= 2.0)) throw InputError("max_moment_bound: r must be >= 2");
  if (!(sigma_max > 0.0) || p == 0)
    throw InputError("max_moment_bound: sigma_max and p must be positive");
  const double c_r = r / 2.0 - 1.0;
  const double log_term = std::log(std::numbers::sqrt2 * std::exp(c_r) * static_cast<double>(p));
  return std::pow(log_term, r / 2.0) * std::pow(2.0 * sigma_max, r);
}

struct MomentEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Sample mean of ||Y||_inf^r with its plain standard error.
inline MomentEstimate estimate_max_moment(const CovMatrix& cov, double r, SeedStream stream,
                                          std::size_t replications) {
  if (replications < 2) throw InputError("estimate_max_moment: need at least 2 replications");
  if (!(r > 0.0)) throw InputError("estimate_max_moment: r must be positive");
  const GaussianSampler sampler(cov);
  CounterRng rng(stream);
  std::vector<double> buf(cov.dim());
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 0; k < replications; ++k) {
    sampler.draw(rng, buf);
    const double value = std::pow(max_norm(buf), r);
    const double delta = value - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (value - mean);
  }
  const double reps = static_cast<double>(replications);
  return {mean, std::sqrt(m2 / (reps - 1.0) / reps)};
}

}  // namespace maxmart
