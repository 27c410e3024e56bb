#pragma once

// Command-line front end. `run` returns the process exit code:
//   0 success, 1 module error or failed verification, 2 argument error.
// Reports go to --out (or stdout); diagnostics go to the error stream.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "repdisc/core.hpp"
#include "repdisc/error.hpp"
#include "repdisc/fmat_io.hpp"
#include "repdisc/metrics.hpp"
#include "repdisc/probes.hpp"
#include "repdisc/report.hpp"
#include "repdisc/spectral.hpp"
#include "repdisc/synth.hpp"
#include "repdisc/verify.hpp"

namespace repdisc::cli {

inline const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names{"td", "td_cls", "td_soft", "cca", "cka", "maxmatch"};
  return names;
}

/// Comma-separated metric list, order preserved; unknown names are argument errors.
inline std::vector<std::string> parse_metric_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    if (std::find(known_metrics().begin(), known_metrics().end(), item) == known_metrics().end()) {
      throw CLI::ValidationError("--metrics", "unknown metric '" + item + "'");
    }
    out.push_back(item);
  }
  if (out.empty()) throw CLI::ValidationError("--metrics", "no metrics requested");
  return out;
}

struct CliConfig {
  // compare / spectrum / invariance inputs
  std::string za, zb, labels;
  std::string eval_za, eval_zb, eval_labels;
  std::string metrics = "td,cca,cka";
  double eps = 0.1;
  std::int64_t restricted = 0;
  // probe
  std::string train_z, train_labels, test_z, test_labels, head = "logistic";
  // synth / verify
  std::string kind = "random";
  std::int64_t p = 4, pp = 4, n = 100000, trials = 20;
  std::string out_prefix;
  std::string theorem;
  std::int64_t dim = 8, samples = 1000000, num_tasks = 100000;
  double max_log10_scale = 1.0, rel_tol = 1e-8;
  // info
  std::string file;
  // shared
  std::uint64_t seed = 0;
  std::string out;
  bool allow_singular = false;
  double ridge = 0.0;
  double lr = 0.1, grad_tol = 1e-6, l2 = 0.0;
  int max_iters = 2000;

  InvSqrtOptions inv_sqrt() const {
    InvSqrtOptions o;
    o.allow_singular = allow_singular;
    o.ridge = ridge;
    return o;
  }

  LogisticConfig logistic() const {
    LogisticConfig c;
    c.learning_rate = lr;
    c.max_iters = max_iters;
    c.grad_tol = grad_tol;
    c.l2 = l2;
    return c;
  }
};

namespace detail {

inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) raise(ErrorKind::IoError, "cannot open for writing: " + path);
  f << text;
  if (!f) raise(ErrorKind::IoError, "write failed: " + path);
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline FeatureMatrix load_centered(const std::string& path, std::ostream& err) {
  FeatureMatrix m = io::load_features(path);
  if (!m.effectively_centered()) {
    err << "note: centering rows of " << path << "\n";
    m = center_rows(m);
  }
  return m;
}

inline int cmd_compare(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto metrics = parse_metric_list(cfg.metrics);
  const FeatureMatrix za = io::load_features(cfg.za);
  const FeatureMatrix zb = io::load_features(cfg.zb);
  std::optional<io::Labels> labels;
  if (!cfg.labels.empty()) labels = io::read_labels(cfg.labels);

  const bool has_eval = !cfg.eval_za.empty() || !cfg.eval_zb.empty();
  require(cfg.eval_za.empty() == cfg.eval_zb.empty(), ErrorKind::InvalidArgument,
          "--eval-za and --eval-zb must be given together");
  std::optional<EvalSplit> eval;
  if (has_eval) {
    eval = EvalSplit{io::load_features(cfg.eval_za), io::load_features(cfg.eval_zb), std::nullopt};
    if (!cfg.eval_labels.empty()) eval->labels = io::read_labels(cfg.eval_labels);
  }
  // Similarity indices are computed on the evaluation pair when one is given.
  const FeatureMatrix& sa = eval ? eval->z : za;
  const FeatureMatrix& sb = eval ? eval->z2 : zb;

  Json report;
  report["command"] = "compare";
  report["za"] = cfg.za;
  report["zb"] = cfg.zb;
  report["p"] = za.dims();
  report["p2"] = zb.dims();
  report["n"] = za.samples();
  if (eval) report["n_eval"] = eval->z.samples();
  Json list = Json::array();
  for (const auto& name : metrics) {
    MetricValue value;
    if (name == "td" || name == "td_cls" || name == "td_soft") {
      require(labels.has_value(), ErrorKind::InvalidArgument, "metric " + name + " needs --labels");
      TdOptions opt;
      opt.inv_sqrt = cfg.inv_sqrt();
      opt.logistic = cfg.logistic();
      opt.eval = eval;
      if (name == "td") {
        opt.head = HeadKind::Linear;
        opt.distance = DistanceKind::Squared;
      } else {
        opt.head = HeadKind::Logistic;
        opt.distance = name == "td_cls" ? DistanceKind::Hard : DistanceKind::Soft;
      }
      const TaskLabels task = std::visit([](const auto& l) -> TaskLabels { return l; }, *labels);
      value = td_generic(za, zb, task, opt);
    } else if (name == "cca") {
      value = d_cca(sa, sb, cfg.inv_sqrt());
    } else if (name == "cka") {
      value = d_cka(sa, sb);
    } else {
      value = max_match_greedy(sa, sb, cfg.eps, cfg.inv_sqrt());
      const AlignmentSpectrum s = d_hat(sa, sb, cfg.inv_sqrt());
      const std::vector<double> sigma(s.sigma.data(), s.sigma.data() + s.sigma.size());
      value.aux["bound"] = max_match_bound(sigma, cfg.eps, s.p(), s.p2());
    }
    value.name = name;
    list.push_back(to_json(value));
  }
  report["metrics"] = std::move(list);
  emit(dump(report), cfg.out, out);
  (void)err;
  return 0;
}

inline int cmd_spectrum(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const FeatureMatrix za = load_centered(cfg.za, err);
  const FeatureMatrix zb = load_centered(cfg.zb, err);
  const AlignmentSpectrum s = d_hat(za, zb, cfg.inv_sqrt());
  std::ostringstream csv;
  csv << std::setprecision(17);
  for (Eigen::Index j = 0; j < s.sigma.size(); ++j) csv << s.sigma(j) << "\n";
  require(!cfg.out.empty(), ErrorKind::InvalidArgument, "spectrum needs --out");
  emit(csv.str(), cfg.out, out);

  const RepsetLimit rep = td_limit_repset(s);
  Json summary;
  summary["command"] = "spectrum";
  summary["p"] = s.p();
  summary["p2"] = s.p2();
  summary["n"] = za.samples();
  summary["swapped"] = s.swapped;
  summary["clamped"] = s.clamped;
  summary["r2"] = r2_from_spectrum(s);
  summary["td_limit_repset"] = rep.value;
  summary["precondition_met"] = rep.precondition_met;
  if (cfg.restricted > 0) {
    Json restricted = Json::array();
    for (Eigen::Index r = 1; r <= cfg.restricted; ++r) {
      restricted.push_back(Json{{"r", r}, {"td_limit", td_limit_restricted(s, r)}});
    }
    summary["restricted"] = std::move(restricted);
  }
  out << dump(summary);
  return 0;
}

inline int cmd_probe(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const FeatureMatrix train = io::load_features(cfg.train_z);
  const io::Labels train_labels = io::read_labels(cfg.train_labels);
  std::optional<FeatureMatrix> test;
  if (!cfg.test_z.empty()) test = io::load_features(cfg.test_z);
  std::optional<io::Labels> test_labels;
  if (!cfg.test_labels.empty()) test_labels = io::read_labels(cfg.test_labels);
  require(!test_labels || test, ErrorKind::InvalidArgument, "--test-labels needs --test-z");

  Json report;
  report["command"] = "probe";
  report["train_z"] = cfg.train_z;
  if (cfg.head == "logistic") {
    const auto* cls = std::get_if<ClassLabels>(&train_labels);
    require(cls != nullptr, ErrorKind::ShapeError, "logistic head needs class labels");
    const LogisticHead h = fit_logistic_head(train, *cls, cfg.logistic());
    if (!h.converged) err << "note: logistic head stopped at max_iters without reaching grad_tol\n";
    report["head"] = to_json(h);
    report["train_accuracy"] = accuracy(predict_classes(h, train), *cls);
    if (test) {
      const auto preds = predict_classes(h, *test);
      report["test_predictions"] = preds;
      if (test_labels) {
        const auto* tcls = std::get_if<ClassLabels>(&*test_labels);
        require(tcls != nullptr, ErrorKind::ShapeError, "test labels must be class labels");
        report["test_accuracy"] = accuracy(preds, *tcls);
      }
    }
  } else if (cfg.head == "linear") {
    const auto* task = std::get_if<TaskVector>(&train_labels);
    require(task != nullptr, ErrorKind::ShapeError, "linear head needs a regression target");
    const LinearHead h = fit_linear_head(train, *task, cfg.inv_sqrt());
    report["head"] = to_json(h);
    report["train_mse"] = mean_squared_gap(predict_linear(h, train), task->values());
    if (test) {
      const Vector preds = predict_linear(h, *test);
      report["test_predictions"] = vector_to_json(preds);
      if (test_labels) {
        const auto* ttask = std::get_if<TaskVector>(&*test_labels);
        require(ttask != nullptr, ErrorKind::ShapeError, "test labels must be a regression target");
        report["test_mse"] = mean_squared_gap(preds, ttask->values());
      }
    }
  } else {
    throw CLI::ValidationError("--head", "expected logistic or linear");
  }
  emit(dump(report), cfg.out, out);
  return 0;
}

inline constexpr std::uint64_t kSpecStream = 1ULL << 32;
inline constexpr std::uint64_t kTaskStream = (1ULL << 32) + 1;
inline constexpr std::uint64_t kSampleStream = (1ULL << 32) + 2;

inline int cmd_synth(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  require(!cfg.out_prefix.empty(), ErrorKind::InvalidArgument, "synth needs --out-prefix");
  const SpecKind kind = parse_spec_kind(cfg.kind);
  RngStream spec_rng(cfg.seed, kSpecStream);
  const JointGaussianSpec spec = make_spec(kind, cfg.p, cfg.pp, spec_rng);
  RngStream sample_rng(cfg.seed, kSampleStream);
  const auto [za, zb] = sample_joint(spec, cfg.n, sample_rng);
  io::write_fmat(za, cfg.out_prefix + "_a.fmat");
  io::write_fmat(zb, cfg.out_prefix + "_b.fmat");
  Json manifest;
  manifest["kind"] = std::string(to_string(kind));
  manifest["p"] = cfg.p;
  manifest["p2"] = cfg.pp;
  manifest["n"] = cfg.n;
  manifest["seed"] = cfg.seed;
  manifest["sigma"] = vector_to_json(spec.spectrum().sigma);
  manifest["A"] = matrix_to_json(spec.a);
  manifest["B"] = matrix_to_json(spec.b);
  manifest["C"] = matrix_to_json(spec.c);
  emit(dump(manifest), cfg.out_prefix + "_spec.json", out);
  err << "wrote " << cfg.out_prefix << "_a.fmat, " << cfg.out_prefix << "_b.fmat, " << cfg.out_prefix
      << "_spec.json\n";
  return 0;
}

/// Unit-norm task coefficients for thm1 drawn from a dedicated stream.
inline std::pair<Vector, Vector> unit_task(Eigen::Index p, Eigen::Index p2, std::uint64_t seed) {
  RngStream rng(seed, kTaskStream);
  Vector a = gaussian_vector(p, rng);
  Vector b = gaussian_vector(p2, rng);
  return {a / a.norm(), b / b.norm()};
}

inline VerifyReport run_one_verification(const std::string& theorem, const CliConfig& cfg, std::ostream& err) {
  auto spec_for = [&] {
    RngStream rng(cfg.seed, kSpecStream);
    return make_spec(parse_spec_kind(cfg.kind), cfg.p, cfg.pp, rng);
  };
  if (theorem == "thm1") {
    const JointGaussianSpec spec = spec_for();
    const auto [a, b] = unit_task(cfg.p, cfg.pp, cfg.seed);
    return verify_thm1(spec, a, b, cfg.n, static_cast<int>(cfg.trials), cfg.seed);
  }
  if (theorem == "thm2") return verify_thm2(spec_for(), cfg.n, static_cast<int>(cfg.trials), cfg.seed);
  if (theorem == "cka") return verify_cka(spec_for(), cfg.n, static_cast<int>(cfg.trials), cfg.seed);
  if (theorem == "ball") return verify_ball_moment(cfg.dim, cfg.samples, cfg.seed);
  if (theorem == "thm3" || theorem == "invariance") {
    FeatureMatrix za, zb;
    if (!cfg.za.empty()) {
      require(!cfg.zb.empty(), ErrorKind::InvalidArgument, "--za needs --zb");
      za = load_centered(cfg.za, err);
      zb = load_centered(cfg.zb, err);
    } else {
      RngStream rng(cfg.seed, kSampleStream);
      auto pair = sample_joint(spec_for(), cfg.n, rng);
      za = std::move(pair.first);
      zb = std::move(pair.second);
    }
    if (theorem == "thm3") return verify_thm3(za, zb, static_cast<int>(cfg.num_tasks), cfg.seed);
    TaskVector y;
    if (!cfg.labels.empty()) {
      const io::Labels l = io::read_labels(cfg.labels);
      const auto* task = std::get_if<TaskVector>(&l);
      require(task != nullptr, ErrorKind::ShapeError, "invariance needs a regression target");
      y = *task;
    } else {
      const auto [a, b] = unit_task(za.dims(), zb.dims(), cfg.seed);
      y = make_task(za, zb, a, b);
    }
    InvarianceOptions opt;
    opt.max_log10_scale = cfg.max_log10_scale;
    opt.rel_tol = cfg.rel_tol;
    return verify_invariance(za, zb, y, static_cast<int>(cfg.trials), cfg.seed, opt);
  }
  throw CLI::ValidationError("--theorem", "unknown theorem '" + theorem + "'");
}

inline int cmd_verify(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<std::string> theorems;
  std::stringstream in(cfg.theorem);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) theorems.push_back(item);
  }
  if (theorems.empty()) throw CLI::ValidationError("--theorem", "no theorem given");
  for (const auto& t : theorems) {
    static const std::vector<std::string> known{"thm1", "thm2", "thm3", "ball", "cka", "invariance"};
    if (std::find(known.begin(), known.end(), t) == known.end()) {
      throw CLI::ValidationError("--theorem", "unknown theorem '" + t + "'");
    }
  }
  bool all_pass = true;
  Json reports = Json::array();
  for (const auto& t : theorems) {
    const VerifyReport r = run_one_verification(t, cfg, err);
    all_pass = all_pass && r.pass;
    err << t << ": " << (r.pass ? "pass" : "FAIL") << " (theoretical " << r.theoretical << ", empirical "
        << r.empirical_mean << " +/- " << r.empirical_stderr << ")\n";
    reports.push_back(to_json(r));
  }
  emit(dump(reports.size() == 1 ? reports[0] : reports), cfg.out, out);
  return all_pass ? 0 : 1;
}

inline int cmd_info(const CliConfig& cfg, std::ostream& out, std::ostream&) {
  const io::Bytes bytes = io::detail::read_file(cfg.file);
  if (io::detail::has_magic(bytes, io::kLabelMagic)) {
    const io::Labels labels = io::decode_labels(bytes);
    if (const auto* cls = std::get_if<ClassLabels>(&labels)) {
      out << "kind=class n=" << cls->size() << " num_classes=" << cls->num_classes() << "\n";
    } else {
      out << "kind=regression n=" << std::get<TaskVector>(labels).size() << "\n";
    }
    return 0;
  }
  const FeatureMatrix m = io::decode_fmat(bytes);
  out << "p=" << m.dims() << " n=" << m.samples() << " centered=" << (m.centered() ? "true" : "false")
      << "\n";
  return 0;
}

}  // namespace detail

/// Parses `args` (without the program name) and dispatches a subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CliConfig cfg;
  CLI::App app{"Representation discrepancy toolkit", "repdisc"};
  app.require_subcommand(1);

  auto add_shared = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
    sub->add_option("--out", cfg.out, "Output path (default: stdout)");
    sub->add_flag("--allow-singular", cfg.allow_singular, "Drop near-zero eigenvalues instead of failing");
    sub->add_option("--ridge", cfg.ridge, "Ridge added to covariance diagonals")->capture_default_str();
  };
  auto add_logistic = [&](CLI::App* sub) {
    sub->add_option("--lr", cfg.lr, "Logistic learning rate")->capture_default_str();
    sub->add_option("--max-iters", cfg.max_iters, "Logistic iteration cap")->capture_default_str();
    sub->add_option("--grad-tol", cfg.grad_tol, "Logistic gradient tolerance")->capture_default_str();
    sub->add_option("--l2", cfg.l2, "Logistic L2 penalty")->capture_default_str();
  };

  auto* compare = app.add_subcommand("compare", "Compute representation-difference metrics");
  compare->add_option("--za", cfg.za, "First feature file (.fmat or .csv)")->required();
  compare->add_option("--zb", cfg.zb, "Second feature file")->required();
  compare->add_option("--labels", cfg.labels, "LBL1 labels for TD metrics");
  compare->add_option("--eval-za", cfg.eval_za, "Held-out first features");
  compare->add_option("--eval-zb", cfg.eval_zb, "Held-out second features");
  compare->add_option("--eval-labels", cfg.eval_labels, "Held-out labels");
  compare->add_option("--metrics", cfg.metrics, "Comma-separated: td,td_cls,td_soft,cca,cka,maxmatch")
      ->capture_default_str();
  compare->add_option("--eps", cfg.eps, "Max-match epsilon")->capture_default_str();
  add_shared(compare);
  add_logistic(compare);

  auto* spectrum = app.add_subcommand("spectrum", "Singular values of the empirical alignment matrix");
  spectrum->add_option("--za", cfg.za)->required();
  spectrum->add_option("--zb", cfg.zb)->required();
  spectrum->add_option("--restricted", cfg.restricted, "Report restricted-set limits for r = 1..R");
  add_shared(spectrum);

  auto* probe = app.add_subcommand("probe", "Fit a downstream head on frozen features");
  probe->add_option("--train-z", cfg.train_z)->required();
  probe->add_option("--train-labels", cfg.train_labels)->required();
  probe->add_option("--test-z", cfg.test_z);
  probe->add_option("--test-labels", cfg.test_labels);
  probe->add_option("--head", cfg.head)->check(CLI::IsMember({"logistic", "linear"}))->capture_default_str();
  add_shared(probe);
  add_logistic(probe);

  auto* synth = app.add_subcommand("synth", "Write a synthetic joint Gaussian feature pair");
  synth->add_option("--kind", cfg.kind)->check(CLI::IsMember({"correlated", "independent", "random"}))
      ->capture_default_str();
  synth->add_option("--p", cfg.p)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--pp", cfg.pp)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--n", cfg.n)->check(CLI::Range(std::int64_t{2}, std::int64_t{1} << 31))->capture_default_str();
  synth->add_option("--out-prefix", cfg.out_prefix)->required();
  synth->add_option("--seed", cfg.seed)->capture_default_str();

  auto* verify = app.add_subcommand("verify", "Monte Carlo verification of the limit identities");
  verify->add_option("--theorem", cfg.theorem, "thm1|thm2|thm3|ball|cka|invariance (comma list allowed)")
      ->required();
  verify->add_option("--kind", cfg.kind)->check(CLI::IsMember({"correlated", "independent", "random"}))
      ->capture_default_str();
  verify->add_option("--p", cfg.p)->check(CLI::PositiveNumber)->capture_default_str();
  verify->add_option("--pp", cfg.pp)->check(CLI::PositiveNumber)->capture_default_str();
  verify->add_option("--n", cfg.n)->check(CLI::Range(std::int64_t{2}, std::int64_t{1} << 31))->capture_default_str();
  verify->add_option("--trials", cfg.trials)->check(CLI::PositiveNumber)->capture_default_str();
  verify->add_option("--dim", cfg.dim)->check(CLI::PositiveNumber)->capture_default_str();
  verify->add_option("--samples", cfg.samples)->check(CLI::Range(std::int64_t{2}, std::int64_t{1} << 40))
      ->capture_default_str();
  verify->add_option("--num-tasks", cfg.num_tasks)->check(CLI::PositiveNumber)->capture_default_str();
  verify->add_option("--za", cfg.za, "Fixed pair for thm3/invariance");
  verify->add_option("--zb", cfg.zb);
  verify->add_option("--labels", cfg.labels, "Regression target for invariance");
  verify->add_option("--max-log10-scale", cfg.max_log10_scale)->capture_default_str();
  verify->add_option("--rel-tol", cfg.rel_tol)->capture_default_str();
  verify->add_option("--seed", cfg.seed)->capture_default_str();
  verify->add_option("--out", cfg.out);

  auto* info = app.add_subcommand("info", "Print header fields of an FMAT or LBL1 file");
  info->add_option("--file", cfg.file)->required();

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("repdisc");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (*compare) return detail::cmd_compare(cfg, out, err);
    if (*spectrum) return detail::cmd_spectrum(cfg, out, err);
    if (*probe) return detail::cmd_probe(cfg, out, err);
    if (*synth) return detail::cmd_synth(cfg, out, err);
    if (*verify) return detail::cmd_verify(cfg, out, err);
    if (*info) return detail::cmd_info(cfg, out, err);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "argument error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "IoError: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace repdisc::cli
