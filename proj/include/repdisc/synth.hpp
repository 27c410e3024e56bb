#pragma once

// Synthetic joint Gaussian feature pairs with known covariance blocks.

#include <string>
#include <string_view>
#include <utility>

#include "repdisc/core.hpp"
#include "repdisc/error.hpp"
#include "repdisc/rng.hpp"
#include "repdisc/spectral.hpp"
#include "repdisc/types.hpp"

namespace repdisc {

/// Joint covariance [[A, B], [Bᵀ, C]] of (z, z′).
struct JointGaussianSpec {
  Matrix a;
  Matrix b;
  Matrix c;

  Eigen::Index p() const { return a.rows(); }
  Eigen::Index p2() const { return c.rows(); }

  Matrix block() const {
    Matrix m(p() + p2(), p() + p2());
    m << a, b, b.transpose(), c;
    return m;
  }

  AlignmentSpectrum spectrum() const { return spectrum_from_covariances(a, b, c); }
};

/// Checks the block-PSD invariant and that A and C are invertible.
inline void validate(const JointGaussianSpec& s) {
  require(s.a.rows() == s.a.cols() && s.c.rows() == s.c.cols(), ErrorKind::ShapeError,
          "A and C must be square");
  require(s.b.rows() == s.p() && s.b.cols() == s.p2(), ErrorKind::ShapeError, "B must be p x p'");
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(s.block(), Eigen::EigenvaluesOnly);
  const Vector& lambda = eig.eigenvalues();
  require(lambda(0) >= -1e-10 * lambda(lambda.size() - 1), ErrorKind::NotPsd,
          "joint covariance is not PSD");
  (void)inv_sqrt_psd(s.a);
  (void)inv_sqrt_psd(s.c);
}

enum class SpecKind { Correlated, Independent, Random };

inline std::string_view to_string(SpecKind k) {
  switch (k) {
    case SpecKind::Correlated: return "correlated";
    case SpecKind::Independent: return "independent";
    case SpecKind::Random: return "random";
  }
  return "?";
}

inline SpecKind parse_spec_kind(std::string_view s) {
  if (s == "correlated") return SpecKind::Correlated;
  if (s == "independent") return SpecKind::Independent;
  if (s == "random") return SpecKind::Random;
  raise(ErrorKind::InvalidArgument, "unknown spec kind '" + std::string(s) + "'");
}

namespace detail {

/// Well-conditioned random covariance GGᵀ/m with G of shape dim×m, m = dim + 4.
inline Matrix random_covariance(Eigen::Index dim, RngStream& rng) {
  const Eigen::Index m = dim + 4;
  const Matrix g = gaussian_matrix(dim, m, rng);
  return g * g.transpose() / static_cast<double>(m);
}

}  // namespace detail

/// - correlated: z′ = Qz, i.e. C = QAQᵀ and B = AQᵀ, so D = Qᵀ.
/// - independent: B = 0.
/// - random: a random PSD (p+p′)-block GGᵀ, G of shape (p+p′)×(p+p′+4).
inline JointGaussianSpec make_spec(SpecKind kind, Eigen::Index p, Eigen::Index p2, RngStream& rng) {
  require(p >= 1 && p <= p2, ErrorKind::ShapeError, "need 1 <= p <= p'");
  JointGaussianSpec s;
  switch (kind) {
    case SpecKind::Correlated: {
      require(p == p2, ErrorKind::ShapeError, "correlated spec needs p == p'");
      s.a = detail::random_covariance(p, rng);
      const Matrix q = random_unitary(p, rng);
      s.b = s.a * q.transpose();
      s.c = q * s.a * q.transpose();
      s.c = 0.5 * (s.c + s.c.transpose());
      break;
    }
    case SpecKind::Independent:
      s.a = detail::random_covariance(p, rng);
      s.c = detail::random_covariance(p2, rng);
      s.b = Matrix::Zero(p, p2);
      break;
    case SpecKind::Random: {
      const Matrix full = detail::random_covariance(p + p2, rng);
      s.a = full.topLeftCorner(p, p);
      s.b = full.topRightCorner(p, p2);
      s.c = full.bottomRightCorner(p2, p2);
      break;
    }
  }
  return s;
}

/// n joint draws via the symmetric square root of the block covariance;
/// both outputs are row-centered after sampling.
inline std::pair<FeatureMatrix, FeatureMatrix> sample_joint(const JointGaussianSpec& s, Eigen::Index n,
                                                            RngStream& rng) {
  require(n >= 2, ErrorKind::ShapeError, "need n >= 2 samples");
  const Matrix root = sqrt_psd(SymmetricPsd(s.block()));
  const Matrix x = root * gaussian_matrix(s.p() + s.p2(), n, rng);
  Matrix z = x.topRows(s.p());
  Matrix z2 = x.bottomRows(s.p2());
  z.colwise() -= z.rowwise().mean();
  z2.colwise() -= z2.rowwise().mean();
  return {FeatureMatrix(std::move(z), true, "a"), FeatureMatrix(std::move(z2), true, "b")};
}

/// Builds tasks Y = α W Z + α′ W′ Z′ for fixed whiteners W, W′.
class TaskBuilder {
 public:
  /// Empirical whitening: Â = ZZᵀ/n, Ĉ = Z′Z′ᵀ/n.
  TaskBuilder(const FeatureMatrix& z, const FeatureMatrix& z2, const InvSqrtOptions& opt = {}) {
    require(z.samples() == z2.samples(), ErrorKind::ShapeError, "representations differ in n");
    const double n = static_cast<double>(z.samples());
    const Matrix& a = z.data();
    const Matrix& b = z2.data();
    whitened_ = inv_sqrt_psd(Matrix(a * a.transpose() / n), opt) * a;
    whitened2_ = inv_sqrt_psd(Matrix(b * b.transpose() / n), opt) * b;
  }

  /// Population whitening with the spec's A and C.
  TaskBuilder(const FeatureMatrix& z, const FeatureMatrix& z2, const JointGaussianSpec& spec,
              const InvSqrtOptions& opt = {}) {
    require(z.samples() == z2.samples(), ErrorKind::ShapeError, "representations differ in n");
    require(z.dims() == spec.p() && z2.dims() == spec.p2(), ErrorKind::ShapeError,
            "features do not match the spec dimensions");
    whitened_ = inv_sqrt_psd(spec.a, opt) * z.data();
    whitened2_ = inv_sqrt_psd(spec.c, opt) * z2.data();
  }

  TaskVector operator()(const Vector& alpha, const Vector& alpha2) const {
    require(alpha.size() == whitened_.rows() && alpha2.size() == whitened2_.rows(), ErrorKind::ShapeError,
            "task coefficient length mismatch");
    require(alpha.norm() <= 1.0 + 1e-12, ErrorKind::NormViolation, "alpha norm exceeds 1");
    require(alpha2.norm() <= 1.0 + 1e-12, ErrorKind::NormViolation, "alpha2 norm exceeds 1");
    Vector y = whitened_.transpose() * alpha + whitened2_.transpose() * alpha2;
    return TaskVector(std::move(y));
  }

 private:
  Matrix whitened_;
  Matrix whitened2_;
};

/// Task with empirical whitening.
inline TaskVector make_task(const FeatureMatrix& z, const FeatureMatrix& z2, const Vector& alpha,
                            const Vector& alpha2) {
  return TaskBuilder(z, z2)(alpha, alpha2);
}

/// Task with population whitening from `spec`.
inline TaskVector make_task(const FeatureMatrix& z, const FeatureMatrix& z2, const Vector& alpha,
                            const Vector& alpha2, const JointGaussianSpec& spec) {
  return TaskBuilder(z, z2, spec)(alpha, alpha2);
}

}  // namespace repdisc
