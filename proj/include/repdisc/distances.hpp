#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "repdisc/error.hpp"
#include "repdisc/types.hpp"

namespace repdisc {

/// A named metric value with auxiliary diagnostics.
struct MetricValue {
  std::string name;
  double value = 0.0;
  std::map<std::string, double> aux;
};

/// Fraction of samples whose predicted classes differ (0 = identical predictions).
inline double td_cls(std::span<const std::uint32_t> preds_a, std::span<const std::uint32_t> preds_b) {
  require(preds_a.size() == preds_b.size(), ErrorKind::ShapeError, "prediction lengths differ");
  require(!preds_a.empty(), ErrorKind::ShapeError, "no predictions");
  std::size_t differ = 0;
  for (std::size_t i = 0; i < preds_a.size(); ++i) differ += preds_a[i] != preds_b[i];
  return static_cast<double>(differ) / static_cast<double>(preds_a.size());
}

namespace detail {

inline void check_probability_columns(const Matrix& probs, const char* which) {
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    const double sum = probs.col(c).sum();
    if (std::abs(sum - 1.0) > 1e-6 || (probs.col(c).array() < -1e-12).any()) {
      raise(ErrorKind::NotAProbability, std::string(which) + " column " + std::to_string(c) +
                                            " sums to " + std::to_string(sum));
    }
  }
}

}  // namespace detail

/// Mean over samples of half the l1 distance between probability columns (K×n).
inline double td_soft(const Matrix& probs_a, const Matrix& probs_b) {
  require(probs_a.rows() == probs_b.rows() && probs_a.cols() == probs_b.cols(), ErrorKind::ShapeError,
          "probability matrices differ in shape");
  require(probs_a.cols() >= 1, ErrorKind::ShapeError, "no samples");
  detail::check_probability_columns(probs_a, "first");
  detail::check_probability_columns(probs_b, "second");
  return 0.5 * (probs_a - probs_b).cwiseAbs().colwise().sum().mean();
}

/// Mean squared gap between two prediction vectors.
inline double mean_squared_gap(const Vector& a, const Vector& b) {
  require(a.size() == b.size() && a.size() >= 1, ErrorKind::ShapeError, "prediction lengths differ");
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

}  // namespace repdisc
