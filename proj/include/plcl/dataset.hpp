#ifndef PLCL_DATASET_HPP
#define PLCL_DATASET_HPP

#include <optional>
#include <string>
#include <utility>

#include "plcl/types.hpp"

namespace plcl {

/// Binary n x l candidate matrix; every row holds at least one candidate.
class PartialLabelMatrix {
 public:
  PartialLabelMatrix() = default;

  explicit PartialLabelMatrix(Matrix y) : y_(std::move(y)) {
    for (Index i = 0; i < y_.rows(); ++i) {
      double count = 0.0;
      for (Index j = 0; j < y_.cols(); ++j) {
        const double v = y_(i, j);
        if (v != 0.0 && v != 1.0) {
          throw Error(ErrorKind::InvariantViolation, "candidate entry (" + std::to_string(i) + "," +
                                                         std::to_string(j) + ") is not 0/1");
        }
        count += v;
      }
      if (count == 0.0) {
        throw Error(ErrorKind::InvariantViolation, "row " + std::to_string(i) + " has an empty candidate set");
      }
    }
  }

  static PartialLabelMatrix one_hot(const LabelVector& labels, int num_labels) {
    Matrix y = Matrix::Zero(static_cast<Index>(labels.size()), num_labels);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      detail::require(labels[i] >= 0 && labels[i] < num_labels, ErrorKind::InvalidInput,
                      "label " + std::to_string(labels[i]) + " out of range");
      y(static_cast<Index>(i), labels[i]) = 1.0;
    }
    return PartialLabelMatrix(std::move(y));
  }

  [[nodiscard]] const Matrix& matrix() const { return y_; }
  /// Non-candidate indicator, 1 - Y.
  [[nodiscard]] Matrix complement() const { return (1.0 - y_.array()).matrix(); }
  [[nodiscard]] Index rows() const { return y_.rows(); }
  [[nodiscard]] Index labels() const { return y_.cols(); }
  [[nodiscard]] bool is_candidate(Index i, Index j) const { return y_(i, j) == 1.0; }
  [[nodiscard]] int candidate_count(Index i) const { return static_cast<int>(y_.row(i).sum()); }

 private:
  Matrix y_;
};

struct PartialDataset {
  Matrix X;
  PartialLabelMatrix Y;
  /// Ground truth, held for evaluation only.
  std::optional<LabelVector> true_labels;

  [[nodiscard]] Index size() const { return X.rows(); }
  [[nodiscard]] Index num_labels() const { return Y.labels(); }

  void validate() const {
    detail::require(X.rows() == Y.rows(), ErrorKind::InvariantViolation,
                    "feature rows (" + std::to_string(X.rows()) + ") and candidate rows (" +
                        std::to_string(Y.rows()) + ") differ");
    detail::require(X.allFinite(), ErrorKind::InvariantViolation, "features contain non-finite values");
    if (true_labels) {
      detail::require(static_cast<Index>(true_labels->size()) == X.rows(), ErrorKind::InvariantViolation,
                      "truth has " + std::to_string(true_labels->size()) + " entries, expected " +
                          std::to_string(X.rows()));
      for (std::size_t i = 0; i < true_labels->size(); ++i) {
        const int t = (*true_labels)[i];
        if (t < 0 || t >= Y.labels() || !Y.is_candidate(static_cast<Index>(i), t)) {
          throw Error(ErrorKind::InvariantViolation,
                      "row " + std::to_string(i) + ": true label " + std::to_string(t) + " is not a candidate");
        }
      }
    }
  }

  /// Rows selected by `indices`, in that order.
  [[nodiscard]] PartialDataset subset(const std::vector<Index>& indices) const {
    PartialDataset out;
    out.X.resize(static_cast<Index>(indices.size()), X.cols());
    Matrix y(static_cast<Index>(indices.size()), Y.labels());
    if (true_labels) out.true_labels.emplace();
    for (std::size_t r = 0; r < indices.size(); ++r) {
      out.X.row(static_cast<Index>(r)) = X.row(indices[r]);
      y.row(static_cast<Index>(r)) = Y.matrix().row(indices[r]);
      if (true_labels) out.true_labels->push_back((*true_labels)[static_cast<std::size_t>(indices[r])]);
    }
    out.Y = PartialLabelMatrix(std::move(y));
    return out;
  }
};

}  // namespace plcl

#endif  // PLCL_DATASET_HPP
