// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "repdisc/repdisc.hpp"

using namespace repdisc;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Vector unit_vector(Eigen::Index dim, RngStream& rng) {
  const Vector g = gaussian_vector(dim, rng);
  return g / g.norm();
}

// 1 ----------------------------------------------------------------------------
Outcome hand_example() {
  const FeatureMatrix z((Matrix(1, 3) << 1, 0, -1).finished(), true);
  const FeatureMatrix z2((Matrix(1, 3) << 0, 1, -1).finished(), true);
  const TaskVector y((Vector(3) << 1, 0, -1).finished(), true);
  const auto t0 = Clock::now();
  const double td = td_linear(z, z2, y).value;
  const double cca = d_cca(z, z2).value;
  const double cka = d_cka(z, z2).value;
  const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  const bool ok = std::abs(td - 0.5) <= 1e-10 && std::abs(cca - 0.75) <= 1e-10 &&
                  std::abs(cka - 0.75) <= 1e-10 && ms < 1.0;
  return {ok, fmt("td=%.12g cca=%.12g cka=%.12g in %.3f ms", td, cca, cka, ms)};
}

// 2 ----------------------------------------------------------------------------
Outcome invariance_suite() {
  const std::vector<std::pair<Eigen::Index, Eigen::Index>> dims{{1, 1}, {2, 5}, {4, 4}, {8, 3}, {8, 8}};
  int failed_pairs = 0;
  int transforms = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    RngStream rng(2002, i);
    const JointGaussianSpec spec = make_spec(SpecKind::Random, std::min(dims[i].first, dims[i].second),
                                             std::max(dims[i].first, dims[i].second), rng);
    auto [z, z2] = sample_joint(spec, 512, rng);
    if (dims[i].first > dims[i].second) std::swap(z, z2);
    const TaskVector y = TaskVector(gaussian_vector(512, rng)).centered_copy();
    const VerifyReport r = verify_invariance(z, z2, y, 100, 2002 + i);
    transforms += 100;
    failed_pairs += !r.pass;
  }
  return {failed_pairs == 0, fmt("%.0f transforms over 5 pairs, %.0f pairs with a violation", transforms,
                                 failed_pairs)};
}

// 3 ----------------------------------------------------------------------------
Outcome single_task_limit() {
  int passed = 0;
  double worst = 0;
  for (int s = 0; s < 5; ++s) {
    RngStream rng(3003, s);
    const JointGaussianSpec spec = make_spec(SpecKind::Random, 4, 4, rng);
    const Vector alpha = unit_vector(4, rng), alpha2 = unit_vector(4, rng);
    const VerifyReport r = verify_thm1(spec, alpha, alpha2, 100000, 20, 3003 + s);
    passed += r.pass;
    worst = std::max(worst, std::abs(r.empirical_mean - r.theoretical));
  }
  return {passed == 5, fmt("%.0f/5 specs within max(3*stderr,0.05), worst gap %.4g", passed, worst)};
}

// 4 ----------------------------------------------------------------------------
double grid_max_2x2(const AlignmentSpectrum& s, int steps) {
  const double pi = std::acos(-1.0);
  double best = 0;
  for (int i = 0; i < steps; ++i) {
    for (int j = 0; j < steps; ++j) {
      const Vector a = (Vector(2) << std::cos(2 * pi * i / steps), std::sin(2 * pi * i / steps)).finished();
      const Vector b = (Vector(2) << std::cos(2 * pi * j / steps), std::sin(2 * pi * j / steps)).finished();
      best = std::max(best, td_limit_single_task(s, a, b));
    }
  }
  return best;
}

Outcome repset_limit() {
  double worst_emp = 0;
  bool monotone = true;
  for (Eigen::Index p : {2, 4}) {
    RngStream rng(4004, static_cast<std::uint64_t>(p));
    const JointGaussianSpec spec = make_spec(SpecKind::Random, p, p, rng);
    const AlignmentSpectrum pop = spec.spectrum();
    const double target = td_limit_repset(pop).value;
    for (int t = 0; t < 5; ++t) {
      const auto [z, z2] = sample_joint(spec, 100000, rng);
      const AlignmentSpectrum emp = d_hat(z, z2);
      worst_emp = std::max(worst_emp, std::abs(td_limit_repset(emp).value - target));
      for (Eigen::Index r = 2; r <= p; ++r)
        monotone = monotone && td_limit_restricted(emp, r) >= td_limit_restricted(emp, r - 1);
    }
  }
  double worst_brute = 0;
  for (int t = 0; t < 10; ++t) {
    RngStream rng(4005, t);
    const JointGaussianSpec spec = make_spec(SpecKind::Random, 2, 2, rng);
    const AlignmentSpectrum s = spec.spectrum();
    const double closed = td_limit_repset(s).value;
    const double grid = grid_max_2x2(s, 720);
    const double ascent = maximize_repset_objective(s.sigma, 2);
    worst_brute = std::max({worst_brute, std::abs(grid - closed), std::abs(ascent - closed)});
  }
  const bool ok = worst_emp <= 0.05 && monotone && worst_brute <= 1e-3;
  return {ok, fmt("empirical-vs-population gap %.4g, restricted monotone=%.0f, brute-force gap %.3g", worst_emp,
                  monotone, worst_brute)};
}

// 5 ----------------------------------------------------------------------------
Outcome task_mean() {
  bool ok = true;
  std::string detail;
  for (Eigen::Index p : {1, 4}) {
    RngStream rng(5005, static_cast<std::uint64_t>(p));
    const JointGaussianSpec spec = make_spec(SpecKind::Random, p, p, rng);
    const auto [z, z2] = sample_joint(spec, 2048, rng);
    const double r2 = d_cca(z, z2).aux.at("r2");
    const double closed = expected_td_over_tasks(p, r2);
    const VerifyReport r = verify_thm3(z, z2, 100000, 5005 + p);
    const bool pass = std::abs(r.empirical_mean - closed) <= 4 * r.empirical_stderr;
    ok = ok && pass;
    detail += fmt("p=%.0f: mean %.6f vs %.6f (se %.2g); ", p, r.empirical_mean, closed, r.empirical_stderr);
  }
  return {ok, detail};
}

// 6 ----------------------------------------------------------------------------
Outcome ball_moment() {
  bool ok = true;
  std::string detail;
  for (Eigen::Index dim : {1, 8, 98}) {
    const VerifyReport r = verify_ball_moment(dim, 1000000, 6006 + dim);
    ok = ok && r.pass;
    detail += fmt("p=%.0f: %.6f vs %.6f; ", dim, r.empirical_mean, r.theoretical);
  }
  return {ok, detail};
}

// 7 ----------------------------------------------------------------------------
Outcome cca_cross_path() {
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    RngStream rng(7007, t);
    const Eigen::Index p = 1 + t % 6, p2 = 1 + (t * 5) % 8;
    const JointGaussianSpec spec = make_spec(SpecKind::Random, std::min(p, p2), std::max(p, p2), rng);
    const auto [z, z2] = sample_joint(spec, 300, rng);
    worst = std::max(worst, std::abs(d_cca(z, z2).aux.at("r2") - r2_from_spectrum(d_hat(z, z2))));
  }
  return {worst <= 1e-9, fmt("max |R2_cca - mean sigma^2| = %.3g over 50 pairs", worst)};
}

// 8 ----------------------------------------------------------------------------
Outcome max_match_dominance() {
  int violations = 0;
  for (int t = 0; t < 50; ++t) {
    RngStream rng(8008, t);
    const Eigen::Index p = 1 + t % 5, p2 = p + t % 3;
    const JointGaussianSpec spec = make_spec(t % 2 ? SpecKind::Random : SpecKind::Correlated, p,
                                             t % 2 ? p2 : p, rng);
    const auto [z, z2] = sample_joint(spec, 512, rng);
    const AlignmentSpectrum s = d_hat(z, z2);
    const std::vector<double> sigma(s.sigma.data(), s.sigma.data() + s.sigma.size());
    for (double eps : {0.0, 0.1, 0.3}) {
      const double greedy = max_match_greedy(z, z2, eps).value;
      violations += greedy > max_match_bound(sigma, eps, s.p(), s.p2()) + 1e-12;
    }
  }
  const bool fixtures = max_match_bound(std::vector<double>{1, 1}, 0.0, 2, 2) == 1.0 &&
                        max_match_bound(std::vector<double>{0.96, 0.1}, 0.3, 2, 2) == 0.5 &&
                        max_match_bound(std::vector<double>{0.5}, 0.0, 1, 1) == 0.0;
  return {violations == 0 && fixtures,
          fmt("%.0f violations in 150 checks, fixtures ok=%.0f", violations, fixtures)};
}

// 9 ----------------------------------------------------------------------------
Outcome cka_expectation_check() {
  int passed = 0;
  double worst = 0;
  for (int s = 0; s < 5; ++s) {
    RngStream rng(9009, s);
    const JointGaussianSpec spec = make_spec(SpecKind::Random, 2 + s % 3, 4, rng);
    const VerifyReport r = verify_cka(spec, 100000, 20, 9009 + s);
    passed += r.pass;
    worst = std::max(worst, std::abs(r.empirical_mean - r.theoretical));
  }
  return {passed == 5, fmt("%.0f/5 specs within max(5*stderr,0.02), worst gap %.4g", passed, worst)};
}

// 10 ---------------------------------------------------------------------------
Outcome special_cases() {
  RngStream rng(10010);
  const JointGaussianSpec corr = make_spec(SpecKind::Correlated, 4, 4, rng);
  const auto [a, b] = sample_joint(corr, 100000, rng);
  const double td_corr = td_linear(a, b, make_task(a, b, unit_vector(4, rng), unit_vector(4, rng), corr)).value;
  const double min_sigma = d_hat(a, b).sigma.minCoeff();

  const JointGaussianSpec ind = make_spec(SpecKind::Independent, 4, 4, rng);
  const auto [c, d] = sample_joint(ind, 100000, rng);
  const double td_ind = td_linear(c, d, make_task(c, d, unit_vector(4, rng), unit_vector(4, rng), ind)).value;
  const bool ok = td_corr < 0.02 && min_sigma > 0.99 && td_ind >= 1.9 && td_ind <= 2.1;
  return {ok, fmt("correlated td=%.3g min sigma=%.9f; independent td=%.4f", td_corr, min_sigma, td_ind)};
}

// 11 ---------------------------------------------------------------------------
ClassLabels latent_labels(const Matrix& wz, const Matrix& wz2, const Matrix& g, const Matrix& g2) {
  const Matrix logits = g * wz + g2 * wz2;
  std::vector<std::uint32_t> out(static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    Eigen::Index best;
    logits.col(i).maxCoeff(&best);
    out[i] = static_cast<std::uint32_t>(best);
  }
  return ClassLabels(out, static_cast<std::uint32_t>(logits.rows()));
}

Outcome ordering() {
  constexpr int kRuns = 20;
  constexpr Eigen::Index kN = 4096, kP = 8, kClasses = 4;
  int wins = 0;
  double same_sum = 0, cross_sum = 0;
  for (int run = 0; run < kRuns; ++run) {
    RngStream rng(11011, run);
    const JointGaussianSpec same = make_spec(SpecKind::Random, kP, kP, rng);
    const JointGaussianSpec other = make_spec(SpecKind::Independent, kP, kP, rng);
    const Matrix wa = inv_sqrt_psd(same.a), wb = inv_sqrt_psd(same.c);
    const Matrix g = gaussian_matrix(kClasses, kP, rng), g2 = gaussian_matrix(kClasses, kP, rng);

    auto draw = [&](Eigen::Index n) {
      const auto [z1, z2] = sample_joint(same, n, rng);
      const FeatureMatrix z3 = sample_joint(other, n, rng).second;
      const ClassLabels y = latent_labels(wa * z1.data(), wb * z2.data(), g, g2);
      return std::make_tuple(z1, z2, z3, y);
    };
    const auto [z1, z2, z3, y] = draw(kN);
    const auto [e1, e2, e3, ey] = draw(kN);

    TdOptions opt;
    opt.head = HeadKind::Logistic;
    opt.distance = DistanceKind::Hard;
    opt.logistic.learning_rate = 0.5;
    opt.logistic.max_iters = 500;
    opt.eval = EvalSplit{e1, e2, TaskLabels(ey)};
    const double td_same = td_generic(z1, z2, y, opt).value;
    opt.eval = EvalSplit{e1, e3, TaskLabels(ey)};
    const double td_cross = td_generic(z1, z3, y, opt).value;
    wins += td_same < td_cross;
    same_sum += td_same;
    cross_sum += td_cross;
  }
  return {wins >= 19, fmt("same-spec smaller in %.0f/20 runs (mean td_cls %.3f vs %.3f)", wins,
                          same_sum / kRuns, cross_sum / kRuns)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"hand example", hand_example},
      {"invariance suite", invariance_suite},
      {"single-task limit", single_task_limit},
      {"representative-set limit", repset_limit},
      {"mean over uniform tasks", task_mean},
      {"unit-ball second moment", ball_moment},
      {"cca cross-path", cca_cross_path},
      {"max-match bound dominance", max_match_dominance},
      {"cka expectation", cka_expectation_check},
      {"correlated/independent limits", special_cases},
      {"td_cls ordering", ordering},
  };
  const std::vector<double> limit_s{0, 10, 120, 0, 60, 0, 0, 0, 0, 0, 0};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o = criteria[i].second();
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (limit_s[i] > 0 && secs > limit_s[i]) {
      o.pass = false;
      o.detail += fmt(" [over the %.0f s budget]", limit_s[i]);
    }
    failures += !o.pass;
    std::printf("%s criterion %2zu (%s): %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
