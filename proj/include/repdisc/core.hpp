#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "repdisc/error.hpp"
#include "repdisc/rng.hpp"
#include "repdisc/types.hpp"

namespace repdisc {

// ---------------------------------------------------------------------------
// Centering

/// Subtracts each row's mean. Idempotent; sets the centered flag.
inline FeatureMatrix center_rows(const FeatureMatrix& m) {
  Matrix data = m.data();
  data.colwise() -= data.rowwise().mean();
  return FeatureMatrix(std::move(data), true, m.name());
}

/// Opt-in column centering. Nothing in the library depends on it.
inline FeatureMatrix center_columns(const FeatureMatrix& m) {
  Matrix data = m.data();
  data.rowwise() -= data.colwise().mean();
  return FeatureMatrix(std::move(data), detail::rows_centered(data), m.name());
}

// ---------------------------------------------------------------------------
// Symmetric PSD matrices

/// Symmetric positive semi-definite matrix. Construction checks symmetry
/// (1e-10 relative) and symmetrizes exactly; PSD-ness is checked where an
/// eigendecomposition is taken.
class SymmetricPsd {
 public:
  explicit SymmetricPsd(const Matrix& m, double eigen_floor = 0.0) : eigen_floor_(eigen_floor) {
    require(m.rows() == m.cols() && m.rows() >= 1, ErrorKind::ShapeError, "PSD matrix must be square");
    require(m.allFinite(), ErrorKind::NonFiniteEntry, "PSD matrix has NaN/Inf");
    const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
    require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale, ErrorKind::NotPsd,
            "matrix is not symmetric");
    data_ = 0.5 * (m + m.transpose());
  }

  const Matrix& data() const noexcept { return data_; }
  Eigen::Index dim() const noexcept { return data_.rows(); }
  double eigen_floor() const noexcept { return eigen_floor_; }

 private:
  Matrix data_;
  double eigen_floor_;
};

struct InvSqrtOptions {
  double rel_tol = 1e-10;
  bool allow_singular = false;
  double ridge = 0.0;
};

namespace detail {

/// V diag(f(λ)) Vᵀ over the retained eigenpairs (λ > rel_tol·λmax).
template <typename F>
Matrix psd_function(const Matrix& m, const InvSqrtOptions& opt, F&& f) {
  require(opt.rel_tol > 0.0, ErrorKind::InvalidArgument, "rel_tol must be positive");
  Matrix shifted = m;
  if (opt.ridge != 0.0) shifted.diagonal().array() += opt.ridge;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(shifted);
  require(eig.info() == Eigen::Success, ErrorKind::NotPsd, "eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();  // ascending
  const double lmax = lambda(lambda.size() - 1);
  const double lmin = lambda(0);
  if (lmax <= 0.0) {
    require(lmin >= 0.0, ErrorKind::NotPsd, "matrix has only nonpositive eigenvalues");
    require(opt.allow_singular, ErrorKind::RankDeficient, "matrix is zero");
    return Matrix::Zero(m.rows(), m.cols());
  }
  const double cut = opt.rel_tol * lmax;
  require(lmin >= -cut, ErrorKind::NotPsd,
          "smallest eigenvalue " + std::to_string(lmin) + " below -rel_tol*lambda_max");
  Vector mapped(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > cut) {
      mapped(i) = f(lambda(i));
    } else {
      require(opt.allow_singular, ErrorKind::RankDeficient,
              "eigenvalue " + std::to_string(lambda(i)) + " at or below rel_tol*lambda_max");
      mapped(i) = 0.0;
    }
  }
  const Matrix& v = eig.eigenvectors();
  return v * mapped.asDiagonal() * v.transpose();
}

}  // namespace detail

/// M^{-1/2} via the symmetric eigendecomposition.
inline Matrix inv_sqrt_psd(const SymmetricPsd& m, const InvSqrtOptions& opt = {}) {
  return detail::psd_function(m.data(), opt, [](double l) { return 1.0 / std::sqrt(l); });
}

inline Matrix inv_sqrt_psd(const Matrix& m, const InvSqrtOptions& opt = {}) {
  return inv_sqrt_psd(SymmetricPsd(m), opt);
}

/// Symmetric square root. Eigenvalues within rel_tol of zero (either sign) map to 0.
inline Matrix sqrt_psd(const SymmetricPsd& m, double rel_tol = 1e-10) {
  InvSqrtOptions opt;
  opt.rel_tol = rel_tol;
  opt.allow_singular = true;
  return detail::psd_function(m.data(), opt, [](double l) { return std::sqrt(l); });
}

/// Orthogonal projector Zᵀ(ZZᵀ)^{-1}Z onto the row space of Z (n×n).
inline Matrix projection(const FeatureMatrix& z, const InvSqrtOptions& opt = {}) {
  require(z.samples() > z.dims(), ErrorKind::ShapeError, "projection needs n > p");
  const Matrix& data = z.data();
  const Matrix whitened = inv_sqrt_psd(Matrix(data * data.transpose()), opt) * data;
  return whitened.transpose() * whitened;
}

// ---------------------------------------------------------------------------
// Random draws

inline Vector gaussian_vector(Eigen::Index dim, RngStream& rng) {
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = rng.normal();
  return v;
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  Matrix m(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.normal();
  return m;
}

/// Uniform draw from the unit ball: normalized Gaussian direction scaled by u^{1/dim}.
inline Vector sample_unit_ball(Eigen::Index dim, RngStream& rng) {
  require(dim >= 1, ErrorKind::ShapeError, "ball dimension must be >= 1");
  Vector v;
  double norm = 0.0;
  do {
    v = gaussian_vector(dim, rng);
    norm = v.norm();
  } while (norm == 0.0);
  const double radius = std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
  return v * (radius / norm);
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, R's diagonal made positive).
inline Matrix random_unitary(Eigen::Index dim, RngStream& rng) {
  require(dim >= 1, ErrorKind::ShapeError, "unitary dimension must be >= 1");
  const Matrix g = gaussian_matrix(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

// ---------------------------------------------------------------------------
// Parallel trials

/// Worker cap from REPDISC_THREADS, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("REPDISC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, count). Callers write into per-index slots so the
/// reduction order never depends on scheduling.
template <typename F>
void parallel_for(std::size_t count, F&& fn) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace repdisc
