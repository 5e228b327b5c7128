#ifndef PLCL_TYPES_HPP
#define PLCL_TYPES_HPP

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <string>
#include <vector>

#include "plcl/error.hpp"

namespace plcl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;  // column-major
using Index = Eigen::Index;

/// Class indices, 0-based.
using LabelVector = std::vector<int>;

namespace detail {

inline void require_same_rows(const Matrix& a, const Matrix& b, const std::string& what) {
  require(a.rows() == b.rows(), ErrorKind::DimensionMismatch,
          what + ": row counts differ (" + std::to_string(a.rows()) + " vs " +
              std::to_string(b.rows()) + ")");
}

inline void require_finite(const Matrix& m, const std::string& what) {
  require(m.allFinite(), ErrorKind::InvalidInput, what + " contains non-finite values");
}

/// Row-wise argmax; ties resolve to the lowest column index.
inline LabelVector argmax_rows(const Matrix& scores) {
  LabelVector out(static_cast<std::size_t>(scores.rows()));
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < scores.cols(); ++j) {
      if (scores(i, j) > scores(i, best)) best = j;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace detail
}  // namespace plcl

#endif  // PLCL_TYPES_HPP
