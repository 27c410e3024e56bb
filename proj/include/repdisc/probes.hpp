#pragma once

// Downstream heads fitted on frozen features: closed-form least squares and
// multinomial logistic regression by full-batch gradient descent.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "repdisc/core.hpp"
#include "repdisc/distances.hpp"
#include "repdisc/error.hpp"
#include "repdisc/types.hpp"

namespace repdisc {

struct LinearHead {
  RowVector w;
  double b = 0.0;
};

/// Least-squares head y ≈ w·z + b. W is solved on centered data, so b = 0
/// whenever Z and Y are already centered.
inline LinearHead fit_linear_head(const FeatureMatrix& z, const TaskVector& y,
                                  const InvSqrtOptions& opt = {}) {
  require(y.size() == z.samples(), ErrorKind::ShapeError, "task length differs from sample count");
  require(z.samples() > z.dims(), ErrorKind::ShapeError, "linear head needs n > p");
  const Vector mean_z = z.data().rowwise().mean();
  const double mean_y = y.values().mean();
  const Matrix zc = z.data().colwise() - mean_z;
  const RowVector yc = (y.values().array() - mean_y).matrix().transpose();
  const Matrix r = inv_sqrt_psd(Matrix(zc * zc.transpose()), opt);
  LinearHead head;
  head.w = (yc * zc.transpose()) * r * r;
  head.b = mean_y - head.w.dot(mean_z);
  return head;
}

inline Vector predict_linear(const LinearHead& h, const FeatureMatrix& z) {
  require(h.w.size() == z.dims(), ErrorKind::ShapeError, "head width differs from feature dims");
  Vector out = (h.w * z.data()).transpose();
  out.array() += h.b;
  return out;
}

struct LogisticConfig {
  double learning_rate = 0.1;
  int max_iters = 2000;
  double grad_tol = 1e-6;
  double l2 = 0.0;
  bool record_loss = false;
};

struct LogisticHead {
  Matrix w;  // K×p
  Vector b;  // K
  LogisticConfig config;
  bool converged = false;
  int iterations = 0;
  double final_grad_norm = std::numeric_limits<double>::infinity();
  std::vector<double> loss_history;  // filled when config.record_loss

  Eigen::Index num_classes() const { return w.rows(); }
};

namespace detail {

/// Column-wise softmax with the max-logit shift.
inline Matrix softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double shift = logits.col(c).maxCoeff();
    out.col(c) = (logits.col(c).array() - shift).exp();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

inline double cross_entropy(const Matrix& logits, const std::vector<std::uint32_t>& labels) {
  double total = 0.0;
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double shift = logits.col(c).maxCoeff();
    const double lse = shift + std::log((logits.col(c).array() - shift).exp().sum());
    total += lse - logits(labels[c], c);
  }
  return total / static_cast<double>(logits.cols());
}

}  // namespace detail

/// Multinomial logistic regression on Z (p×n). Rows are standardized to unit
/// variance for the descent and the scaling is folded back into W and b.
/// Hitting max_iters is not an error; check `converged`.
inline LogisticHead fit_logistic_head(const FeatureMatrix& z, const ClassLabels& labels,
                                      const LogisticConfig& cfg = {}) {
  const Eigen::Index n = z.samples();
  const Eigen::Index p = z.dims();
  const Eigen::Index k = labels.num_classes();
  require(static_cast<Eigen::Index>(labels.size()) == n, ErrorKind::ShapeError,
          "label count differs from sample count");
  require(n >= k, ErrorKind::ShapeError, "need n >= number of classes");
  {
    std::vector<bool> seen(k, false);
    Eigen::Index distinct = 0;
    for (auto l : labels.labels()) {
      if (!seen[l]) {
        seen[l] = true;
        ++distinct;
      }
    }
    require(distinct >= 2, ErrorKind::ShapeError, "labels contain a single class");
  }

  const Vector mean = z.data().rowwise().mean();
  Matrix x = z.data().colwise() - mean;
  Vector scale = (x.rowwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt();
  for (Eigen::Index r = 0; r < p; ++r) {
    if (!(scale(r) > 0.0)) scale(r) = 1.0;
  }
  x = scale.cwiseInverse().asDiagonal() * x;

  Matrix onehot = Matrix::Zero(k, n);
  for (Eigen::Index i = 0; i < n; ++i) onehot(labels.labels()[i], i) = 1.0;

  Matrix w = Matrix::Zero(k, p);
  Vector b = Vector::Zero(k);
  LogisticHead head;
  head.config = cfg;
  const double inv_n = 1.0 / static_cast<double>(n);

  for (int iter = 0;; ++iter) {
    const Matrix logits = (w * x).colwise() + b;
    if (cfg.record_loss) {
      head.loss_history.push_back(detail::cross_entropy(logits, labels.labels()) +
                                  0.5 * cfg.l2 * w.squaredNorm());
    }
    const Matrix residual = (detail::softmax_columns(logits) - onehot) * inv_n;
    const Matrix grad_w = residual * x.transpose() + cfg.l2 * w;
    const Vector grad_b = residual.rowwise().sum();
    const double grad_norm = std::max(grad_w.cwiseAbs().maxCoeff(), grad_b.cwiseAbs().maxCoeff());
    head.final_grad_norm = grad_norm;
    head.iterations = iter;
    if (grad_norm <= cfg.grad_tol) {
      head.converged = true;
      break;
    }
    if (iter >= cfg.max_iters) break;
    w -= cfg.learning_rate * grad_w;
    b -= cfg.learning_rate * grad_b;
  }

  head.w = w * scale.cwiseInverse().asDiagonal();
  head.b = b - head.w * mean;
  return head;
}

/// K×n matrix of class probabilities.
inline Matrix predict_proba(const LogisticHead& h, const FeatureMatrix& z) {
  require(h.w.cols() == z.dims(), ErrorKind::ShapeError, "head width differs from feature dims");
  return detail::softmax_columns((h.w * z.data()).colwise() + h.b);
}

/// Argmax class per sample; ties go to the lowest class index.
inline std::vector<std::uint32_t> predict_classes(const LogisticHead& h, const FeatureMatrix& z) {
  require(h.w.cols() == z.dims(), ErrorKind::ShapeError, "head width differs from feature dims");
  const Matrix logits = (h.w * z.data()).colwise() + h.b;
  std::vector<std::uint32_t> out(static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < logits.rows(); ++r) {
      if (logits(r, c) > logits(best, c)) best = r;
    }
    out[c] = static_cast<std::uint32_t>(best);
  }
  return out;
}

inline double accuracy(std::span<const std::uint32_t> preds, const ClassLabels& labels) {
  require(preds.size() == labels.size(), ErrorKind::ShapeError, "prediction count differs");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == labels.labels()[i];
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

// ---------------------------------------------------------------------------
// Generic transferred discrepancy

using TaskLabels = std::variant<TaskVector, ClassLabels>;

enum class HeadKind { Linear, Logistic };
enum class DistanceKind { Squared, Hard, Soft };

/// Held-out features on which the fitted heads are compared. Optional labels
/// add per-head accuracy (classification) or MSE (regression) to the aux map.
struct EvalSplit {
  FeatureMatrix z;
  FeatureMatrix z2;
  std::optional<TaskLabels> labels;
};

struct TdOptions {
  HeadKind head = HeadKind::Linear;
  DistanceKind distance = DistanceKind::Squared;
  LogisticConfig logistic{};
  InvSqrtOptions inv_sqrt{};
  std::optional<EvalSplit> eval;
};

/// Fits one head per representation on the training pair and averages the
/// chosen distance between their outputs, on the eval split when given.
inline MetricValue td_generic(const FeatureMatrix& z, const FeatureMatrix& z2, const TaskLabels& y,
                              const TdOptions& opt = {}) {
  require(z.samples() == z2.samples(), ErrorKind::ShapeError, "representations differ in n");
  const FeatureMatrix& ez = opt.eval ? opt.eval->z : z;
  const FeatureMatrix& ez2 = opt.eval ? opt.eval->z2 : z2;
  require(ez.samples() == ez2.samples(), ErrorKind::ShapeError, "eval representations differ in n");
  require(ez.dims() == z.dims() && ez2.dims() == z2.dims(), ErrorKind::ShapeError,
          "eval features differ in dimension from training features");

  MetricValue out;
  out.aux["n_train"] = static_cast<double>(z.samples());
  out.aux["n_eval"] = static_cast<double>(ez.samples());

  if (opt.head == HeadKind::Linear) {
    require(opt.distance == DistanceKind::Squared, ErrorKind::InvalidArgument,
            "linear heads use the squared distance");
    const auto* task = std::get_if<TaskVector>(&y);
    require(task != nullptr, ErrorKind::ShapeError, "linear head needs a regression target");
    const LinearHead h = fit_linear_head(z, *task, opt.inv_sqrt);
    const LinearHead h2 = fit_linear_head(z2, *task, opt.inv_sqrt);
    const Vector pa = predict_linear(h, ez);
    const Vector pb = predict_linear(h2, ez2);
    out.name = "td";
    out.value = mean_squared_gap(pa, pb);
    if (opt.eval && opt.eval->labels) {
      const auto* target = std::get_if<TaskVector>(&*opt.eval->labels);
      require(target != nullptr && target->size() == ez.samples(), ErrorKind::ShapeError,
              "eval target must be a regression vector over the eval samples");
      out.aux["mse_a"] = mean_squared_gap(pa, target->values());
      out.aux["mse_b"] = mean_squared_gap(pb, target->values());
    }
    return out;
  }

  const auto* cls = std::get_if<ClassLabels>(&y);
  require(cls != nullptr, ErrorKind::ShapeError, "logistic head needs class labels");
  const LogisticHead h = fit_logistic_head(z, *cls, opt.logistic);
  const LogisticHead h2 = fit_logistic_head(z2, *cls, opt.logistic);
  out.aux["converged_a"] = h.converged ? 1.0 : 0.0;
  out.aux["converged_b"] = h2.converged ? 1.0 : 0.0;
  if (opt.eval && opt.eval->labels) {
    const auto* target = std::get_if<ClassLabels>(&*opt.eval->labels);
    require(target != nullptr && static_cast<Eigen::Index>(target->size()) == ez.samples(),
            ErrorKind::ShapeError, "eval labels must be class labels over the eval samples");
    out.aux["accuracy_a"] = accuracy(predict_classes(h, ez), *target);
    out.aux["accuracy_b"] = accuracy(predict_classes(h2, ez2), *target);
  }
  switch (opt.distance) {
    case DistanceKind::Hard: {
      out.name = "td_cls";
      const auto pa = predict_classes(h, ez);
      const auto pb = predict_classes(h2, ez2);
      out.value = td_cls(pa, pb);
      break;
    }
    case DistanceKind::Soft:
      out.name = "td_soft";
      out.value = td_soft(predict_proba(h, ez), predict_proba(h2, ez2));
      break;
    case DistanceKind::Squared:
      raise(ErrorKind::InvalidArgument, "logistic heads use the hard or soft distance");
  }
  return out;
}

}  // namespace repdisc
