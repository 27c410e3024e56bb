#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "repdisc/error.hpp"

namespace repdisc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

namespace detail {

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline bool rows_centered(const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mean = m.row(r).mean();
    const double scale = m.row(r).cwiseAbs().maxCoeff() + 1.0;
    if (std::abs(mean) > 1e-12 * scale) return false;
  }
  return true;
}

}  // namespace detail

/// p×n feature matrix: rows are feature dimensions, columns are samples.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;

  explicit FeatureMatrix(Matrix data, bool centered = false, std::string name = {})
      : data_(std::move(data)), centered_(centered), name_(std::move(name)) {
    require(data_.rows() >= 1 && data_.cols() >= 1, ErrorKind::ShapeError,
            "feature matrix must be at least 1x1");
    require(detail::all_finite(data_), ErrorKind::NonFiniteEntry, "feature matrix has NaN/Inf");
    if (centered_) {
      require(detail::rows_centered(data_), ErrorKind::InvalidArgument,
              "matrix flagged centered but row means are nonzero");
    }
  }

  const Matrix& data() const noexcept { return data_; }
  bool centered() const noexcept { return centered_; }
  const std::string& name() const noexcept { return name_; }

  Eigen::Index dims() const noexcept { return data_.rows(); }
  Eigen::Index samples() const noexcept { return data_.cols(); }

  /// True if flagged centered or if the row means actually vanish.
  bool effectively_centered() const { return centered_ || detail::rows_centered(data_); }

  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    return a.centered_ == b.centered_ && a.data_.rows() == b.data_.rows() &&
           a.data_.cols() == b.data_.cols() && a.data_ == b.data_;
  }

 private:
  Matrix data_;
  bool centered_ = false;
  std::string name_;
};

/// Regression target, one value per sample.
class TaskVector {
 public:
  TaskVector() = default;

  explicit TaskVector(Vector values, bool centered = false)
      : values_(std::move(values)), centered_(centered) {
    require(values_.size() >= 1, ErrorKind::ShapeError, "task vector is empty");
    require(values_.allFinite(), ErrorKind::NonFiniteEntry, "task vector has NaN/Inf");
    if (centered_) {
      const double scale = values_.cwiseAbs().maxCoeff() + 1.0;
      require(std::abs(values_.mean()) <= 1e-12 * scale, ErrorKind::InvalidArgument,
              "task flagged centered but mean is nonzero");
    }
  }

  const Vector& values() const noexcept { return values_; }
  bool centered() const noexcept { return centered_; }
  Eigen::Index size() const noexcept { return values_.size(); }

  TaskVector centered_copy() const {
    if (centered_) return *this;
    Vector v = values_.array() - values_.mean();
    return TaskVector(std::move(v), true);
  }

 private:
  Vector values_;
  bool centered_ = false;
};

/// Categorical labels in [0, num_classes).
class ClassLabels {
 public:
  ClassLabels() = default;

  ClassLabels(std::vector<std::uint32_t> labels, std::uint32_t num_classes)
      : labels_(std::move(labels)), num_classes_(num_classes) {
    require(!labels_.empty(), ErrorKind::ShapeError, "label vector is empty");
    require(num_classes_ >= 2, ErrorKind::ShapeError, "need at least two classes");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] >= num_classes_) {
        raise(ErrorKind::LabelOutOfRange, "label " + std::to_string(labels_[i]) + " at index " +
                                              std::to_string(i) + " >= num_classes " +
                                              std::to_string(num_classes_));
      }
    }
  }

  const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }
  std::uint32_t num_classes() const noexcept { return num_classes_; }
  std::size_t size() const noexcept { return labels_.size(); }

  friend bool operator==(const ClassLabels&, const ClassLabels&) = default;

 private:
  std::vector<std::uint32_t> labels_;
  std::uint32_t num_classes_ = 0;
};

}  // namespace repdisc
