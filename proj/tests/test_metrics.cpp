#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "repdisc/metrics.hpp"
#include "repdisc/spectral.hpp"
#include "test_util.hpp"

using namespace repdisc;
using repdisc::testing::hand_z;
using repdisc::testing::hand_z2;
using repdisc::testing::random_centered;
using repdisc::testing::random_pair;

namespace {

TaskVector hand_y() { return TaskVector((Vector(3) << 1, 0, -1).finished(), true); }

// Fits y ≈ Xᵀw by the normal equations and returns the fitted values.
Vector normal_equation_fit(const Matrix& x, const Vector& y) {
  const Vector w = (x * x.transpose()).ldlt().solve(x * y);
  return x.transpose() * w;
}

double td_oracle(const Matrix& z, const Matrix& z2, const Vector& y) {
  const Vector gap = normal_equation_fit(z, y) - normal_equation_fit(z2, y);
  return gap.squaredNorm() / static_cast<double>(y.size());
}

double cka_oracle(const Matrix& z, const Matrix& z2) {
  double cross = 0, self_a = 0, self_b = 0;
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double ka = z.col(i).dot(z.col(j));
      const double kb = z2.col(i).dot(z2.col(j));
      cross += ka * kb;
      self_a += ka * ka;
      self_b += kb * kb;
    }
  }
  return 1.0 - cross / std::sqrt(self_a * self_b);
}

}  // namespace

TEST(TdLinear, HandExample) {
  EXPECT_NEAR(td_linear(hand_z(), hand_z2(), hand_y()).value, 0.5, 1e-10);
  EXPECT_NEAR(td_oracle(hand_z().data(), hand_z2().data(), hand_y().values()), 0.5, 1e-12);
  EXPECT_EQ(td_linear(hand_z(), hand_z(), hand_y()).value, 0.0);
}

TEST(TdLinear, MatchesNormalEquationOracle) {
  RngStream rng(21);
  for (int t = 0; t < 10; ++t) {
    const auto [a, b] = random_pair(1 + t % 4, 2 + t % 5, 100, rng);
    const TaskVector y = TaskVector(gaussian_vector(100, rng)).centered_copy();
    EXPECT_NEAR(td_linear(a, b, y).value, td_oracle(a.data(), b.data(), y.values()), 1e-9);
  }
}

TEST(TdLinear, AutoCentersAndFlags) {
  const FeatureMatrix shifted((Matrix(1, 3) << 11, 10, 9).finished());
  const MetricValue v = td_linear(shifted, hand_z2(), hand_y());
  EXPECT_NEAR(v.value, 0.5, 1e-10);
  EXPECT_EQ(v.aux.at("auto_centered"), 1.0);
  EXPECT_EQ(td_linear(hand_z(), hand_z2(), hand_y()).aux.count("auto_centered"), 0u);
}

TEST(TdLinear, Errors) {
  const FeatureMatrix wide(Matrix::Identity(3, 3));
  EXPECT_THROW(td_linear(wide, hand_z2(), hand_y()), Error);
  const FeatureMatrix zero(Matrix::Zero(1, 3), true);
  try {
    td_linear(zero, hand_z2(), hand_y());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RankDeficient);
  }
}

TEST(Cca, HandExample) {
  const MetricValue v = d_cca(hand_z(), hand_z2());
  EXPECT_NEAR(v.value, 0.75, 1e-12);
  EXPECT_NEAR(v.aux.at("r2"), 0.25, 1e-12);
  EXPECT_NEAR(d_cca(hand_z(), hand_z()).value, 0.0, 1e-12);
}

TEST(Cca, MatchesCanonicalCorrelationOracle) {
  // R² as the mean squared canonical correlation from the whitened cross covariance.
  RngStream rng(22);
  for (int t = 0; t < 5; ++t) {
    const auto [a, b] = random_pair(3, 5, 200, rng);
    const Matrix saa = a.data() * a.data().transpose();
    const Matrix sbb = b.data() * b.data().transpose();
    const Matrix sab = a.data() * b.data().transpose();
    const Matrix la = saa.llt().matrixL();
    const Matrix lb = sbb.llt().matrixL();
    const Matrix m = la.triangularView<Eigen::Lower>().solve(
        lb.triangularView<Eigen::Lower>().solve(sab.transpose()).transpose());
    const Vector rho = m.jacobiSvd().singularValues();
    EXPECT_NEAR(d_cca(a, b).aux.at("r2"), rho.squaredNorm() / 3.0, 1e-10);
  }
}

TEST(Cka, HandExample) {
  const MetricValue v = d_cka(hand_z(), hand_z2());
  EXPECT_NEAR(v.value, 0.75, 1e-12);
  EXPECT_NEAR(v.aux.at("s_cka"), 0.25, 1e-12);
  EXPECT_NEAR(d_cka(hand_z(), FeatureMatrix(3.5 * hand_z().data(), true)).value, 0.0, 1e-12);
}

TEST(Cka, MatchesGramOracle) {
  RngStream rng(23);
  for (int t = 0; t < 5; ++t) {
    const auto [a, b] = random_pair(2 + t, 4, 60, rng);
    EXPECT_NEAR(d_cka(a, b).value, cka_oracle(a.data(), b.data()), 1e-10);
  }
}

TEST(Cka, ZeroMatrix) {
  try {
    d_cka(FeatureMatrix(Matrix::Zero(1, 3), true), hand_z2());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroMatrix);
  }
}

TEST(Distances, TdClsExamples) {
  const std::vector<std::uint32_t> a{0, 1, 1, 0}, b{0, 1, 0, 1}, c{1, 0, 0, 1};
  EXPECT_EQ(td_cls(a, a), 0.0);
  EXPECT_EQ(td_cls(a, c), 1.0);
  EXPECT_EQ(td_cls(a, b), 0.5);
  EXPECT_THROW(td_cls(a, std::vector<std::uint32_t>{0}), Error);
}

TEST(Distances, TdSoftExamples) {
  const Matrix a = (Matrix(2, 3) << 1, 1, 1, 0, 0, 0).finished();
  const Matrix b = (Matrix(2, 3) << 0, 0, 0, 1, 1, 1).finished();
  EXPECT_EQ(td_soft(a, a), 0.0);
  EXPECT_DOUBLE_EQ(td_soft(a, b), 1.0);
  const Matrix c = (Matrix(2, 1) << 0.75, 0.25).finished();
  const Matrix d = (Matrix(2, 1) << 0.25, 0.75).finished();
  EXPECT_DOUBLE_EQ(td_soft(c, d), 0.5);
  try {
    td_soft((Matrix(2, 1) << 0.5, 0.6).finished(), c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotAProbability);
  }
}

TEST(Metrics, SymmetricAndInRange) {
  RngStream rng(24);
  for (int t = 0; t < 20; ++t) {
    const auto [a, b] = random_pair(1 + t % 6, 1 + (t * 7) % 6, 80, rng);
    const TaskVector y = TaskVector(gaussian_vector(80, rng)).centered_copy();
    const double td = td_linear(a, b, y).value;
    EXPECT_NEAR(td, td_linear(b, a, y).value, 1e-10);
    EXPECT_GE(td, 0.0);
    const double cca = d_cca(a, b).value;
    EXPECT_NEAR(cca, d_cca(b, a).value, 1e-10);
    EXPECT_GE(cca, -1e-12);
    EXPECT_LE(cca, 1.0 + 1e-12);
    const double cka = d_cka(a, b).value;
    EXPECT_NEAR(cka, d_cka(b, a).value, 1e-10);
    EXPECT_GE(cka, -1e-12);
    EXPECT_LE(cka, 1.0 + 1e-12);
  }
}

TEST(Metrics, InvariantToScaleAndRotation) {
  RngStream rng(25);
  for (int t = 0; t < 10; ++t) {
    const Eigen::Index p = 2 + t % 4, p2 = 3 + t % 3;
    const auto [a, b] = random_pair(p, p2, 150, rng);
    const TaskVector y = TaskVector(gaussian_vector(150, rng)).centered_copy();
    const FeatureMatrix a2(0.3 * random_unitary(p, rng) * a.data(), true);
    const FeatureMatrix b2(7.0 * random_unitary(p2, rng) * b.data(), true);
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(x)); };
    EXPECT_LT(rel(td_linear(a, b, y).value, td_linear(a2, b2, y).value), 1e-8);
    EXPECT_LT(rel(d_cca(a, b).value, d_cca(a2, b2).value), 1e-8);
    EXPECT_LT(rel(d_cka(a, b).value, d_cka(a2, b2).value), 1e-8);
  }
}

TEST(MaxMatch, SelfMatchIsFull) {
  RngStream rng(26);
  const FeatureMatrix z = random_centered(5, 300, rng);
  const MetricValue v = max_match_greedy(z, z, 0.0);
  EXPECT_EQ(v.value, 1.0);
  EXPECT_EQ(v.aux.at("matched_a"), 5.0);
}

TEST(MaxMatch, IndependentMatchesNothing) {
  RngStream rng(27);
  const FeatureMatrix a = random_centered(8, 4096, rng);
  const FeatureMatrix b = random_centered(8, 4096, rng);
  EXPECT_EQ(max_match_greedy(a, b, 0.1).value, 0.0);
}

TEST(MaxMatch, SharedRowsFound) {
  // Orthonormal centered rows q1..q5: Z = [q1; q2; q3], Z′ = [q1; q2; q4; q5].
  RngStream rng(28);
  const Matrix raw = random_centered(5, 500, rng).data();
  const Eigen::HouseholderQR<Matrix> qr(raw.transpose());
  const Matrix q = (qr.householderQ() * Matrix::Identity(500, 5)).transpose();
  const FeatureMatrix z((Matrix(3, 500) << q.row(0), q.row(1), q.row(2)).finished());
  const FeatureMatrix z2((Matrix(4, 500) << q.row(0), q.row(1), q.row(3), q.row(4)).finished());
  const MetricValue v = max_match_greedy(z, z2, 0.0);
  EXPECT_EQ(v.aux.at("matched_a"), 2.0);
  EXPECT_EQ(v.aux.at("matched_b"), 2.0);
  EXPECT_NEAR(v.value, 4.0 / 7.0, 1e-15);
  EXPECT_EQ(max_match_greedy(z, z2, 1.0).value, 1.0);
}

TEST(MaxMatch, BoundDominatesGreedy) {
  RngStream rng(29);
  for (int t = 0; t < 15; ++t) {
    const auto [a, b] = random_pair(3, 3, 200, rng);
    const AlignmentSpectrum s = d_hat(a, b);
    const std::vector<double> sigma(s.sigma.data(), s.sigma.data() + s.sigma.size());
    for (double eps : {0.0, 0.1, 0.3, 0.8}) {
      EXPECT_LE(max_match_greedy(a, b, eps).value, max_match_bound(sigma, eps, 3, 3) + 1e-12);
    }
  }
}

TEST(MaxMatchBound, Fixtures) {
  EXPECT_EQ(max_match_bound(std::vector<double>{1, 1}, 0.0, 2, 2), 1.0);
  EXPECT_EQ(max_match_bound(std::vector<double>{0.96, 0.1}, 0.3, 2, 2), 0.5);
  EXPECT_EQ(max_match_bound(std::vector<double>{0.5}, 0.0, 1, 1), 0.0);
}

TEST(MaxMatchBound, MatchesEnumeration) {
  RngStream rng(30);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> sigma(4);
    for (double& s : sigma) s = rng.uniform();
    std::sort(sigma.rbegin(), sigma.rend());
    const double eps = rng.uniform();
    int k = 0;
    for (int m = 1; m <= 4; ++m) {
      double sum = 0;
      for (int j = 0; j < m; ++j) sum += sigma[j] * sigma[j];
      if (sum >= m * (1 - eps * eps)) k = m;
    }
    EXPECT_DOUBLE_EQ(max_match_bound(sigma, eps, 4, 6), 2.0 * k / 10.0);
  }
}

TEST(MaxMatchBound, Errors) {
  try {
    max_match_bound(std::vector<double>{0.1, 0.5}, 0.0, 2, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsortedSigma);
  }
  try {
    max_match_bound(std::vector<double>{1.5}, 0.0, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SigmaOutOfRange);
  }
}
