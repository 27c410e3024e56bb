#pragma once

// Alignment matrix D = A^{-1/2} B C^{-1/2}, its empirical estimator, and the
// closed-form limits that depend on its singular values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

#include "repdisc/core.hpp"
#include "repdisc/error.hpp"
#include "repdisc/metrics.hpp"
#include "repdisc/rng.hpp"
#include "repdisc/types.hpp"

namespace repdisc {

/// D (p×p′, p ≤ p′) with its full SVD D = U Σ Vᵀ.
struct AlignmentSpectrum {
  Matrix d;
  Matrix u;
  Matrix v;
  Vector sigma;          // nonincreasing, length p
  bool clamped = false;  // some σ in (1, 1+1e-8] was set to 1
  bool swapped = false;  // inputs were exchanged to get p ≤ p′

  Eigen::Index p() const { return d.rows(); }
  Eigen::Index p2() const { return d.cols(); }
};

inline constexpr double kSigmaLeak = 1e-8;

/// Builds the spectrum of an already oriented D (rows ≤ cols).
inline AlignmentSpectrum make_spectrum(Matrix d, bool swapped = false) {
  require(d.rows() >= 1 && d.rows() <= d.cols(), ErrorKind::ShapeError, "alignment matrix needs p <= p'");
  Eigen::JacobiSVD<Matrix> svd(d, Eigen::ComputeFullU | Eigen::ComputeFullV);
  AlignmentSpectrum s;
  s.sigma = svd.singularValues();
  require(s.sigma(0) <= 1.0 + kSigmaLeak, ErrorKind::SigmaOutOfRange,
          "largest singular value " + std::to_string(s.sigma(0)) + " exceeds 1");
  for (Eigen::Index j = 0; j < s.sigma.size(); ++j) {
    if (s.sigma(j) > 1.0) {
      s.sigma(j) = 1.0;
      s.clamped = true;
    }
  }
  s.u = svd.matrixU();
  s.v = svd.matrixV();
  s.d = std::move(d);
  s.swapped = swapped;
  return s;
}

/// Population spectrum from the joint covariance blocks A (p×p), B (p×p′), C (p′×p′).
inline AlignmentSpectrum spectrum_from_covariances(const Matrix& a, const Matrix& b, const Matrix& c,
                                                   const InvSqrtOptions& opt = {}) {
  require(b.rows() == a.rows() && b.cols() == c.rows(), ErrorKind::ShapeError,
          "B must be p x p' for A p x p and C p' x p'");
  const Matrix d = inv_sqrt_psd(a, opt) * b * inv_sqrt_psd(c, opt);
  if (d.rows() > d.cols()) return make_spectrum(d.transpose(), true);
  return make_spectrum(d, false);
}

/// Empirical D̂ = (ZZᵀ)^{-1/2} Z Z′ᵀ (Z′Z′ᵀ)^{-1/2}.
inline AlignmentSpectrum d_hat(const FeatureMatrix& z, const FeatureMatrix& z2, const InvSqrtOptions& opt = {}) {
  MetricValue scratch;
  detail::require_same_n(z, z2);
  const bool swap = z.dims() > z2.dims();
  const FeatureMatrix a = detail::prepared(swap ? z2 : z, scratch);
  const FeatureMatrix b = detail::prepared(swap ? z : z2, scratch);
  const Matrix& za = a.data();
  const Matrix& zb = b.data();
  const Matrix d = inv_sqrt_psd(Matrix(za * za.transpose()), opt) * (za * zb.transpose()) *
                   inv_sqrt_psd(Matrix(zb * zb.transpose()), opt);
  return make_spectrum(d, swap);
}

// ---------------------------------------------------------------------------
// Limits

namespace detail {

inline void check_task_norm(const Vector& alpha, const char* which) {
  require(alpha.norm() <= 1.0 + 1e-12, ErrorKind::NormViolation,
          std::string(which) + " has norm " + std::to_string(alpha.norm()) + " > 1");
}

inline double repset_term(double s) { return 2.0 * (1.0 - s) * (1.0 + s) * (1.0 + s); }

}  // namespace detail

/// Almost-sure limit of td_linear for the task Y = αA^{-1/2}Z + α′C^{-1/2}Z′.
/// `alpha` pairs with the first representation passed to d_hat /
/// spectrum_from_covariances, `alpha2` with the second.
inline double td_limit_single_task(const AlignmentSpectrum& s, const Vector& alpha, const Vector& alpha2) {
  const Vector& a = s.swapped ? alpha2 : alpha;
  const Vector& a2 = s.swapped ? alpha : alpha2;
  require(a.size() == s.p() && a2.size() == s.p2(), ErrorKind::ShapeError,
          "task coefficients do not match the alignment matrix");
  detail::check_task_norm(alpha, "alpha");
  detail::check_task_norm(alpha2, "alpha2");
  const Matrix& d = s.d;
  const Matrix ddt = d * d.transpose();
  const Matrix dtd = d.transpose() * d;
  const double first = a.dot(a) - a.dot(ddt * a);
  const double second = a2.dot(a2) - a2.dot(dtd * a2);
  const double cross = 2.0 * (a.dot(d * a2) - a.dot(ddt * (d * a2)));
  return first + second + cross;
}

struct RepsetLimit {
  double value = 0.0;
  bool precondition_met = true;  // closed form applies
  double candidate = 0.0;        // per-coordinate candidate formula (cross-check)
};

/// Per-coordinate candidate for the p < p′ optimum: put β on one singular
/// index and split β′ between that index and the extra p′−p directions.
inline double repset_candidate(const Vector& sigma, Eigen::Index p2) {
  double best = 0.0;
  const bool has_extra = p2 > sigma.size();
  for (Eigen::Index j = 0; j < sigma.size(); ++j) {
    const double s = sigma(j);
    const double v = (has_extra && s * s + s >= 1.0) ? 1.0 + (1.0 - s * s) * (2.0 - s * s)
                                                     : detail::repset_term(s);
    best = std::max(best, v);
  }
  return best;
}

/// β-coordinate objective Σ_j (1−σ_j²)(β_j² + β′_j² + 2σ_jβ_jβ′_j) + Σ_{k>p} β′_k².
inline double repset_objective(const Vector& sigma, const Vector& beta, const Vector& beta2) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < sigma.size(); ++j) {
    const double s = sigma(j);
    total += (1.0 - s * s) * (beta(j) * beta(j) + beta2(j) * beta2(j) + 2.0 * s * beta(j) * beta2(j));
  }
  for (Eigen::Index k = sigma.size(); k < beta2.size(); ++k) total += beta2(k) * beta2(k);
  return total;
}

struct AscentOptions {
  int starts = 32;
  double tol = 1e-10;
  int max_iters = 20000;
  std::uint64_t seed = 0x7d5eedULL;
};

/// Multi-start projected gradient ascent of repset_objective over two unit balls.
/// The objective is a convex quadratic, so each projected step is an ascent step.
inline double maximize_repset_objective(const Vector& sigma, Eigen::Index p2, const AscentOptions& opt = {}) {
  const Eigen::Index p = sigma.size();
  auto project = [](Vector v) {
    const double norm = v.norm();
    if (norm > 1.0) v /= norm;
    return v;
  };
  auto gradient = [&](const Vector& b, const Vector& b2, Vector& g, Vector& g2) {
    g = Vector::Zero(p);
    g2 = Vector::Zero(p2);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double s = sigma(j);
      const double w = 1.0 - s * s;
      g(j) = 2.0 * w * (b(j) + s * b2(j));
      g2(j) = 2.0 * w * (b2(j) + s * b(j));
    }
    for (Eigen::Index k = p; k < p2; ++k) g2(k) = 2.0 * b2(k);
  };

  std::vector<double> results(static_cast<std::size_t>(opt.starts));
  parallel_for(results.size(), [&](std::size_t start) {
    RngStream rng(opt.seed, start);
    Vector b = sample_unit_ball(p, rng);
    Vector b2 = sample_unit_ball(p2, rng);
    double value = repset_objective(sigma, b, b2);
    Vector g, g2;
    for (int it = 0; it < opt.max_iters; ++it) {
      gradient(b, b2, g, g2);
      Vector nb = project(b + g);
      Vector nb2 = project(b2 + g2);
      const double next = repset_objective(sigma, nb, nb2);
      const double step = std::sqrt((nb - b).squaredNorm() + (nb2 - b2).squaredNorm());
      b = std::move(nb);
      b2 = std::move(nb2);
      const bool done = std::abs(next - value) <= opt.tol && step <= std::sqrt(opt.tol);
      value = next;
      if (done) break;
    }
    results[start] = value;
  });
  double best = results.front();
  for (double v : results) best = std::max(best, v);
  return best;
}

/// Limit of TD over the representative task set.
inline RepsetLimit td_limit_repset(const AlignmentSpectrum& s, const AscentOptions& opt = {}) {
  RepsetLimit out;
  const Vector& sigma = s.sigma;
  out.candidate = repset_candidate(sigma, s.p2());
  const double smallest = sigma(sigma.size() - 1);
  out.precondition_met =
      s.p() == s.p2() || (1.0 - smallest) * (1.0 + smallest) * (1.0 + smallest) >= 1.0;
  if (out.precondition_met) {
    for (Eigen::Index j = 0; j < sigma.size(); ++j) out.value = std::max(out.value, detail::repset_term(sigma(j)));
    return out;
  }
  out.value = maximize_repset_objective(sigma, s.p2(), opt);
  return out;
}

/// Limit of TD over the restricted set S_r (top-r singular directions).
inline double td_limit_restricted(const AlignmentSpectrum& s, Eigen::Index r) {
  require(r >= 1 && r <= s.p(), ErrorKind::IndexOutOfRange,
          "r = " + std::to_string(r) + " outside [1, " + std::to_string(s.p()) + "]");
  double best = 0.0;
  for (Eigen::Index j = 0; j < r; ++j) best = std::max(best, detail::repset_term(s.sigma(j)));
  return best;
}

/// (Σ σ_j²)/p, the expected R²_CCA.
inline double r2_from_spectrum(const AlignmentSpectrum& s) {
  return s.sigma.squaredNorm() / static_cast<double>(s.sigma.size());
}

/// Mean TD over uniform unit-ball tasks with empirical whitening, p = p′ form.
inline double expected_td_over_tasks(Eigen::Index p, double r2) {
  require(p >= 1, ErrorKind::ShapeError, "p must be >= 1");
  require(r2 >= -1e-12 && r2 <= 1.0 + 1e-12, ErrorKind::InvalidArgument, "r2 outside [0, 1]");
  const double pd = static_cast<double>(p);
  return 2.0 * pd / (pd + 2.0) * (1.0 - r2);
}

/// General two-term form (p − Σσ²)/(p+2) + (p′ − Σσ²)/(p′+2).
inline double expected_td_over_tasks(const AlignmentSpectrum& s) {
  const double sum_sq = s.sigma.squaredNorm();
  const double p = static_cast<double>(s.p());
  const double p2 = static_cast<double>(s.p2());
  return (p - sum_sq) / (p + 2.0) + (p2 - sum_sq) / (p2 + 2.0);
}

/// Population CKA: tr(DCDᵀA) / (√tr(A²) √tr(C²)).
inline double cka_expectation(const Matrix& a, const Matrix& b, const Matrix& c, const InvSqrtOptions& opt = {}) {
  require(a.rows() == a.cols() && c.rows() == c.cols(), ErrorKind::ShapeError, "A and C must be square");
  require(b.rows() == a.rows() && b.cols() == c.rows(), ErrorKind::ShapeError, "B must be p x p'");
  const Matrix d = inv_sqrt_psd(a, opt) * b * inv_sqrt_psd(c, opt);
  const double num = (d * c * d.transpose() * a).trace();
  return num / (std::sqrt((a * a).trace()) * std::sqrt((c * c).trace()));
}

}  // namespace repdisc
