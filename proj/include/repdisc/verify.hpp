#pragma once

// Monte Carlo checks of the asymptotic and exact identities. Every trial i
// draws from RngStream(seed, i) and results are reduced in trial order, so a
// report is reproducible bit-for-bit from (seed, trials, n).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "repdisc/core.hpp"
#include "repdisc/metrics.hpp"
#include "repdisc/rng.hpp"
#include "repdisc/spectral.hpp"
#include "repdisc/synth.hpp"
#include "repdisc/types.hpp"

namespace repdisc {

struct VerifyReport {
  std::string theorem;
  double theoretical = 0.0;
  double empirical_mean = 0.0;
  double empirical_stderr = 0.0;
  std::int64_t trials = 0;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  bool pass = false;
  std::string tolerance_rule;
};

/// Tolerance rules understood by tolerance_from_rule:
///   "max(<k>*stderr,<floor>)", "<k>*stderr", "rel(<tol>)".
inline double tolerance_from_rule(const std::string& rule, double stderr_value, double theoretical) {
  double k = 0.0;
  double floor = 0.0;
  if (std::sscanf(rule.c_str(), "max(%lf*stderr,%lf)", &k, &floor) == 2) {
    return std::max(k * stderr_value, floor);
  }
  if (std::sscanf(rule.c_str(), "rel(%lf)", &k) == 1) {
    return k * std::max(std::abs(theoretical), 1e-12);
  }
  if (std::sscanf(rule.c_str(), "%lf*stderr", &k) == 1) return k * stderr_value;
  raise(ErrorKind::InvalidArgument, "unknown tolerance rule '" + rule + "'");
}

/// The pass decision as a pure function of the report fields.
inline bool rederive_pass(const VerifyReport& r) {
  return std::abs(r.empirical_mean - r.theoretical) <=
         tolerance_from_rule(r.tolerance_rule, r.empirical_stderr, r.theoretical);
}

namespace detail {

struct MeanStderr {
  double mean = 0.0;
  double stderr_value = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  out.stderr_value = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

inline VerifyReport finish(std::string theorem, double theoretical, const std::vector<double>& samples,
                           std::int64_t n, std::uint64_t seed, std::string rule) {
  const MeanStderr ms = mean_stderr(samples);
  VerifyReport r;
  r.theorem = std::move(theorem);
  r.theoretical = theoretical;
  r.empirical_mean = ms.mean;
  r.empirical_stderr = ms.stderr_value;
  r.trials = static_cast<std::int64_t>(samples.size());
  r.n = n;
  r.seed = seed;
  r.tolerance_rule = std::move(rule);
  r.pass = rederive_pass(r);
  return r;
}

inline bool close_relative(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-12});
}

}  // namespace detail

/// Empirical td_linear on population-whitened tasks vs the single-task limit.
inline VerifyReport verify_thm1(const JointGaussianSpec& spec, const Vector& alpha, const Vector& alpha2,
                                Eigen::Index n, int trials, std::uint64_t seed) {
  require(trials >= 1, ErrorKind::InvalidArgument, "trials must be >= 1");
  const double theoretical = td_limit_single_task(spec.spectrum(), alpha, alpha2);
  std::vector<double> values(static_cast<std::size_t>(trials));
  parallel_for(values.size(), [&](std::size_t i) {
    RngStream rng(seed, i);
    const auto [z, z2] = sample_joint(spec, n, rng);
    const TaskVector y = make_task(z, z2, alpha, alpha2, spec);
    values[i] = td_linear(z, z2, y).value;
  });
  return detail::finish("thm1", theoretical, values, n, seed, "max(3*stderr,0.05)");
}

/// Representative-set limit from the empirical D̂ vs from the population D.
inline VerifyReport verify_thm2(const JointGaussianSpec& spec, Eigen::Index n, int trials, std::uint64_t seed) {
  require(trials >= 1, ErrorKind::InvalidArgument, "trials must be >= 1");
  const double theoretical = td_limit_repset(spec.spectrum()).value;
  std::vector<double> values(static_cast<std::size_t>(trials));
  parallel_for(values.size(), [&](std::size_t i) {
    RngStream rng(seed, i);
    const auto [z, z2] = sample_joint(spec, n, rng);
    values[i] = td_limit_repset(d_hat(z, z2)).value;
  });
  return detail::finish("thm2", theoretical, values, n, seed, "max(3*stderr,0.05)");
}

/// Mean td_linear over uniform unit-ball tasks (empirical whitening) vs the
/// spectral closed form on the same pair. Exact in expectation.
inline VerifyReport verify_thm3(const FeatureMatrix& z, const FeatureMatrix& z2, int num_tasks, std::uint64_t seed) {
  require(num_tasks >= 1, ErrorKind::InvalidArgument, "num_tasks must be >= 1");
  MetricValue scratch;
  const FeatureMatrix a = detail::prepared(z, scratch);
  const FeatureMatrix b = detail::prepared(z2, scratch);
  const double theoretical = expected_td_over_tasks(d_hat(a, b));
  const TaskBuilder tasks(a, b);
  std::vector<double> values(static_cast<std::size_t>(num_tasks));
  parallel_for(values.size(), [&](std::size_t i) {
    RngStream rng(seed, i);
    const Vector alpha = sample_unit_ball(a.dims(), rng);
    const Vector alpha2 = sample_unit_ball(b.dims(), rng);
    values[i] = td_linear(a, b, tasks(alpha, alpha2)).value;
  });
  return detail::finish("thm3", theoretical, values, a.samples(), seed, "4*stderr");
}

/// Mean of x₁² for x uniform in the unit ball vs 1/(dim+2).
inline VerifyReport verify_ball_moment(Eigen::Index dim, std::int64_t samples, std::uint64_t seed) {
  require(dim >= 1, ErrorKind::ShapeError, "dim must be >= 1");
  require(samples >= 2, ErrorKind::InvalidArgument, "need at least two samples");
  constexpr std::int64_t kBlock = 1 << 16;
  const std::int64_t blocks = (samples + kBlock - 1) / kBlock;
  std::vector<double> sums(static_cast<std::size_t>(blocks));
  std::vector<double> sq_sums(static_cast<std::size_t>(blocks));
  parallel_for(sums.size(), [&](std::size_t blk) {
    RngStream rng(seed, blk);
    const std::int64_t begin = static_cast<std::int64_t>(blk) * kBlock;
    const std::int64_t end = std::min(samples, begin + kBlock);
    double s = 0.0, ss = 0.0;
    for (std::int64_t i = begin; i < end; ++i) {
      const double x = sample_unit_ball(dim, rng)(0);
      s += x * x;
      ss += x * x * x * x;
    }
    sums[blk] = s;
    sq_sums[blk] = ss;
  });
  double s = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < sums.size(); ++i) {
    s += sums[i];
    ss += sq_sums[i];
  }
  const double count = static_cast<double>(samples);
  const double mean = s / count;
  const double var = std::max(0.0, (ss - count * mean * mean) / (count - 1.0));
  VerifyReport r;
  r.theorem = "ball";
  r.theoretical = 1.0 / (static_cast<double>(dim) + 2.0);
  r.empirical_mean = mean;
  r.empirical_stderr = std::sqrt(var / count);
  r.trials = samples;
  r.n = dim;
  r.seed = seed;
  r.tolerance_rule = "4*stderr";
  r.pass = rederive_pass(r);
  return r;
}

/// Monte Carlo linear CKA similarity vs tr(DCDᵀA)/(√tr(A²)√tr(C²)).
inline VerifyReport verify_cka(const JointGaussianSpec& spec, Eigen::Index n, int trials, std::uint64_t seed) {
  require(trials >= 1, ErrorKind::InvalidArgument, "trials must be >= 1");
  const double theoretical = cka_expectation(spec.a, spec.b, spec.c);
  std::vector<double> values(static_cast<std::size_t>(trials));
  parallel_for(values.size(), [&](std::size_t i) {
    RngStream rng(seed, i);
    const auto [z, z2] = sample_joint(spec, n, rng);
    values[i] = 1.0 - d_cka(z, z2).value;
  });
  return detail::finish("cka", theoretical, values, n, seed, "max(5*stderr,0.02)");
}

struct InvarianceOptions {
  double rel_tol = 1e-8;
  double max_log10_scale = 1.0;  // β drawn log-uniformly from [10^-s, 10^s]
  bool identity_only = false;    // β = 1, Q = I (sanity mode)
};

/// td_linear, d_cca and d_cka under Z → βQZ, Z′ → β′Q′Z′. Passes iff every
/// trial matches all three metrics within rel_tol.
inline VerifyReport verify_invariance(const FeatureMatrix& z, const FeatureMatrix& z2, const TaskVector& y,
                                      int trials, std::uint64_t seed, const InvarianceOptions& opt = {}) {
  require(trials >= 1, ErrorKind::InvalidArgument, "trials must be >= 1");
  MetricValue scratch;
  const FeatureMatrix a = detail::prepared(z, scratch);
  const FeatureMatrix b = detail::prepared(z2, scratch);
  const double base_td = td_linear(a, b, y).value;
  const double base_cca = d_cca(a, b).value;
  const double base_cka = d_cka(a, b).value;

  std::vector<double> values(static_cast<std::size_t>(trials));
  std::vector<char> ok(static_cast<std::size_t>(trials), 0);
  parallel_for(values.size(), [&](std::size_t i) {
    RngStream rng(seed, i);
    Matrix q = Matrix::Identity(a.dims(), a.dims());
    Matrix q2 = Matrix::Identity(b.dims(), b.dims());
    double beta = 1.0, beta2 = 1.0;
    if (!opt.identity_only) {
      beta = std::pow(10.0, opt.max_log10_scale * (2.0 * rng.uniform() - 1.0));
      beta2 = std::pow(10.0, opt.max_log10_scale * (2.0 * rng.uniform() - 1.0));
      q = random_unitary(a.dims(), rng);
      q2 = random_unitary(b.dims(), rng);
    }
    const FeatureMatrix ta(beta * q * a.data());
    const FeatureMatrix tb(beta2 * q2 * b.data());
    const double td = td_linear(ta, tb, y).value;
    values[i] = td;
    ok[i] = detail::close_relative(td, base_td, opt.rel_tol) &&
            detail::close_relative(d_cca(ta, tb).value, base_cca, opt.rel_tol) &&
            detail::close_relative(d_cka(ta, tb).value, base_cka, opt.rel_tol);
  });
  std::ostringstream rule;
  rule << "rel(" << opt.rel_tol << ")";
  VerifyReport r = detail::finish("invariance", base_td, values, a.samples(), seed, rule.str());
  for (char c : ok) r.pass = r.pass && c;
  return r;
}

}  // namespace repdisc
