#pragma once

// Pairwise representation-difference metrics. All take p×n feature matrices
// sharing the sample axis; uncentered inputs are centered on the fly and
// flagged with aux["auto_centered"] = 1.

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "repdisc/core.hpp"
#include "repdisc/distances.hpp"
#include "repdisc/error.hpp"
#include "repdisc/probes.hpp"
#include "repdisc/types.hpp"

namespace repdisc {

namespace detail {

inline FeatureMatrix prepared(const FeatureMatrix& m, MetricValue& out) {
  if (m.effectively_centered()) return m;
  out.aux["auto_centered"] = 1.0;
  return center_rows(m);
}

inline void require_same_n(const FeatureMatrix& a, const FeatureMatrix& b) {
  require(a.samples() == b.samples(), ErrorKind::ShapeError,
          "representations differ in sample count (" + std::to_string(a.samples()) + " vs " +
              std::to_string(b.samples()) + ")");
}

/// (ZZᵀ)^{-1/2} Z: rows form an orthonormal basis of Z's row space.
inline Matrix orthonormal_rows(const FeatureMatrix& z, const InvSqrtOptions& opt) {
  const Matrix& d = z.data();
  return inv_sqrt_psd(Matrix(d * d.transpose()), opt) * d;
}

}  // namespace detail

/// Closed-form linear-probe TD: (1/n)‖Y(P − P′)‖² with P, P′ the row-space projectors.
inline MetricValue td_linear(const FeatureMatrix& z, const FeatureMatrix& z2, const TaskVector& y,
                             const InvSqrtOptions& opt = {}) {
  MetricValue out{"td", 0.0, {}};
  detail::require_same_n(z, z2);
  require(y.size() == z.samples(), ErrorKind::ShapeError, "task length differs from sample count");
  require(z.samples() > std::max(z.dims(), z2.dims()), ErrorKind::ShapeError, "td needs n > max(p, p')");
  const FeatureMatrix a = detail::prepared(z, out);
  const FeatureMatrix b = detail::prepared(z2, out);
  const TaskVector yc = y.centered_copy();
  const LinearHead h = fit_linear_head(a, yc, opt);
  const LinearHead h2 = fit_linear_head(b, yc, opt);
  out.value = mean_squared_gap(predict_linear(h, a), predict_linear(h2, b));
  return out;
}

/// 1 − R²_CCA with R² = ‖Q′ᵀQ‖²_F / min(p, p′); aux["r2"] carries R².
inline MetricValue d_cca(const FeatureMatrix& z, const FeatureMatrix& z2, const InvSqrtOptions& opt = {}) {
  MetricValue out{"cca", 0.0, {}};
  detail::require_same_n(z, z2);
  const bool swap = z.dims() > z2.dims();
  const FeatureMatrix a = detail::prepared(swap ? z2 : z, out);
  const FeatureMatrix b = detail::prepared(swap ? z : z2, out);
  require(a.samples() > b.dims(), ErrorKind::ShapeError, "cca needs n > max(p, p')");
  const Matrix q = detail::orthonormal_rows(a, opt).transpose();   // n×p
  const Matrix q2 = detail::orthonormal_rows(b, opt).transpose();  // n×p'
  const double r2 = (q2.transpose() * q).squaredNorm() / static_cast<double>(a.dims());
  out.value = 1.0 - r2;
  out.aux["r2"] = r2;
  out.aux["swapped"] = swap ? 1.0 : 0.0;
  return out;
}

/// 1 − ‖ZZ′ᵀ‖²_F / (‖ZZᵀ‖_F ‖Z′Z′ᵀ‖_F) (linear CKA).
inline MetricValue d_cka(const FeatureMatrix& z, const FeatureMatrix& z2) {
  MetricValue out{"cka", 0.0, {}};
  detail::require_same_n(z, z2);
  const FeatureMatrix a = detail::prepared(z, out);
  const FeatureMatrix b = detail::prepared(z2, out);
  const double self_a = (a.data() * a.data().transpose()).norm();
  const double self_b = (b.data() * b.data().transpose()).norm();
  require(self_a > 0.0 && self_b > 0.0, ErrorKind::ZeroMatrix, "cka of a zero feature matrix");
  const double cross = (a.data() * b.data().transpose()).squaredNorm();
  const double similarity = cross / (self_a * self_b);
  out.value = 1.0 - similarity;
  out.aux["s_cka"] = similarity;
  return out;
}

namespace detail {

/// Distance from each row of `rows` to span(basis rows); basis may be empty.
inline Vector residual_norms(const Matrix& rows, const Matrix& basis) {
  Vector out(rows.rows());
  if (basis.rows() == 0) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) out(i) = rows.row(i).norm();
    return out;
  }
  const Eigen::HouseholderQR<Matrix> qr(basis.transpose());  // n×s
  const Matrix q = qr.householderQ() * Matrix::Identity(basis.cols(), basis.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const Vector x = rows.row(i).transpose();
    out(i) = (x - q * (q.transpose() * x)).norm();
  }
  return out;
}

inline Matrix select_rows(const Matrix& m, const std::vector<Eigen::Index>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

}  // namespace detail

/// Maximum ε-match between the whitened row sets of Z and Z′.
///
/// Starts from all rows and repeatedly drops the single row (either side) whose
/// distance to the span of the other side's surviving rows exceeds √n·eps,
/// largest violation first, lower index and Z's side on ties. Any valid match
/// survives every drop, so the fixed point is the largest match.
inline MetricValue max_match_greedy(const FeatureMatrix& z, const FeatureMatrix& z2, double eps,
                                    const InvSqrtOptions& opt = {}) {
  MetricValue out{"maxmatch", 0.0, {}};
  require(eps >= 0.0, ErrorKind::InvalidArgument, "eps must be >= 0");
  detail::require_same_n(z, z2);
  const FeatureMatrix a = detail::prepared(z, out);
  const FeatureMatrix b = detail::prepared(z2, out);
  const double n = static_cast<double>(a.samples());
  const double root_n = std::sqrt(n);
  // Rows of Â^{-1/2}Z each have norm √n.
  const Matrix wa = detail::orthonormal_rows(a, opt) * root_n;
  const Matrix wb = detail::orthonormal_rows(b, opt) * root_n;
  const double threshold = root_n * eps + 1e-9 * root_n;

  std::vector<Eigen::Index> keep_a(static_cast<std::size_t>(wa.rows()));
  std::vector<Eigen::Index> keep_b(static_cast<std::size_t>(wb.rows()));
  for (std::size_t i = 0; i < keep_a.size(); ++i) keep_a[i] = static_cast<Eigen::Index>(i);
  for (std::size_t i = 0; i < keep_b.size(); ++i) keep_b[i] = static_cast<Eigen::Index>(i);

  while (!keep_a.empty() || !keep_b.empty()) {
    const Matrix sa = detail::select_rows(wa, keep_a);
    const Matrix sb = detail::select_rows(wb, keep_b);
    const Vector ra = detail::residual_norms(sa, sb);
    const Vector rb = detail::residual_norms(sb, sa);
    int side = -1;
    std::size_t pos = 0;
    double worst = threshold;
    for (std::size_t i = 0; i < keep_a.size(); ++i) {
      if (ra(static_cast<Eigen::Index>(i)) > worst) {
        worst = ra(static_cast<Eigen::Index>(i));
        side = 0;
        pos = i;
      }
    }
    for (std::size_t i = 0; i < keep_b.size(); ++i) {
      if (rb(static_cast<Eigen::Index>(i)) > worst) {
        worst = rb(static_cast<Eigen::Index>(i));
        side = 1;
        pos = i;
      }
    }
    if (side < 0) break;
    auto& keep = side == 0 ? keep_a : keep_b;
    keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(pos));
  }

  out.aux["matched_a"] = static_cast<double>(keep_a.size());
  out.aux["matched_b"] = static_cast<double>(keep_b.size());
  out.aux["eps"] = eps;
  out.value = static_cast<double>(keep_a.size() + keep_b.size()) /
              static_cast<double>(a.dims() + b.dims());
  return out;
}

/// 2k/(p+p′) with k the largest integer such that σ₁²+…+σ_k² ≥ k(1−ε²).
inline double max_match_bound(std::span<const double> sigma, double eps, Eigen::Index p, Eigen::Index p2) {
  require(eps >= 0.0, ErrorKind::InvalidArgument, "eps must be >= 0");
  require(p >= 1 && p2 >= 1, ErrorKind::ShapeError, "dimensions must be >= 1");
  require(static_cast<Eigen::Index>(sigma.size()) <= std::min(p, p2), ErrorKind::ShapeError,
          "more singular values than min(p, p')");
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    require(sigma[j] >= 0.0 && sigma[j] <= 1.0, ErrorKind::SigmaOutOfRange,
            "sigma[" + std::to_string(j) + "] outside [0, 1]");
    if (j > 0) require(sigma[j] <= sigma[j - 1], ErrorKind::UnsortedSigma, "sigma must be nonincreasing");
  }
  const double target = 1.0 - eps * eps;
  std::size_t k = 0;
  double prefix = 0.0;
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    prefix += sigma[j] * sigma[j];
    const double m = static_cast<double>(j + 1);
    if (prefix >= m * target - m * 1e-12) k = j + 1;
  }
  return 2.0 * static_cast<double>(k) / static_cast<double>(p + p2);
}

}  // namespace repdisc
