#ifndef PLCL_KERNEL_HPP
#define PLCL_KERNEL_HPP

// Gaussian kernel construction and the closed-form regularized least-squares
// solves used by both the ordinary and the complementary classifier.
//
// Kernel form: given K and a coefficient c > 0 the regressor output is
//   H = c K A + 1 b^T
// where (A, b) solve the stationarity system
//   (c K + I/2) A + 1 b^T = T,   A^T 1 = 0.
// c = 1/(2 lambda) for the ordinary classifier and alpha/(2 lambda) for the
// complementary one.

#include <cmath>
#include <optional>
#include <string>

#include "plcl/types.hpp"

namespace plcl {

struct KernelCache {
  Matrix K;
  double sigma = 0.0;
  /// Empty when the cache was built from an explicit matrix.
  Matrix train_features;

  [[nodiscard]] Index size() const { return K.rows(); }

  /// Wraps an explicit PSD matrix (e.g. a linear kernel XX^T). Such a cache
  /// cannot evaluate cross kernels, so predict_scores rejects it.
  static KernelCache from_matrix(Matrix k) {
    detail::require(k.rows() == k.cols(), ErrorKind::DimensionMismatch, "kernel matrix must be square");
    KernelCache cache;
    cache.K = 0.5 * (k + k.transpose());
    return cache;
  }
};

struct RegressorSolution {
  Matrix A;  // n x l dual coefficients
  Vector b;  // length l
  double c = 0.0;
};

struct LinearSolution {
  Matrix W;  // q x l
  Vector b;  // length l
};

namespace detail {

inline double squared_distance(const Matrix& a, Index i, const Matrix& b, Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

/// m x n matrix of exp(-|x_i - y_j|^2 / (2 sigma^2)).
inline Matrix gaussian_cross_kernel(const Matrix& x, const Matrix& y, double sigma) {
  const double denom = 2.0 * sigma * sigma;
  Matrix out(x.rows(), y.rows());
  for (Index j = 0; j < y.rows(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      out(i, j) = std::exp(-squared_distance(x, i, y, j) / denom);
    }
  }
  return out;
}

}  // namespace detail

/// Builds the Gaussian kernel with sigma set to the mean Euclidean distance
/// over all unordered pairs of distinct training rows.
inline KernelCache gaussian_kernel(const Matrix& x) {
  const Index n = x.rows();
  detail::require(n >= 2, ErrorKind::InvalidInput, "gaussian_kernel needs at least 2 samples");
  detail::require_finite(x, "feature matrix");

  Matrix sq(n, n);
  double distance_sum = 0.0;
  for (Index j = 0; j < n; ++j) {
    sq(j, j) = 0.0;
    for (Index i = j + 1; i < n; ++i) {
      const double d2 = detail::squared_distance(x, i, x, j);
      sq(i, j) = d2;
      sq(j, i) = d2;
      distance_sum += std::sqrt(d2);
    }
  }
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const double sigma = distance_sum / pairs;
  if (!(sigma > 0.0)) {
    throw Error(ErrorKind::AllPointsIdentical, "all training points coincide; kernel bandwidth undefined");
  }

  KernelCache cache;
  cache.sigma = sigma;
  cache.train_features = x;
  const double denom = 2.0 * sigma * sigma;
  cache.K.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) cache.K(i, j) = std::exp(-sq(i, j) / denom);
  }
  cache.K = (0.5 * (cache.K + cache.K.transpose())).eval();
  cache.K.diagonal().setOnes();
  return cache;
}

/// Holds the Cholesky factorization of (cK + I/2) so that repeated fits with
/// the same kernel and coefficient (one per outer iteration) share it.
class KernelRegressor {
 public:
  KernelRegressor(const KernelCache& cache, double c) : c_(c), n_(cache.size()) {
    detail::require(c > 0.0 && std::isfinite(c), ErrorKind::InvalidInput, "regressor coefficient must be positive");
    Matrix system = c * cache.K;
    system.diagonal().array() += 0.5;
    llt_.compute(system);
    if (llt_.info() != Eigen::Success) {
      throw Error(ErrorKind::NumericalFailure, "Cholesky factorization of cK + I/2 failed");
    }
    s_ = llt_.solve(Vector::Ones(n_));
    s_sum_ = s_.sum();
  }

  [[nodiscard]] RegressorSolution fit(const Matrix& targets) const {
    detail::require(targets.rows() == n_, ErrorKind::DimensionMismatch,
                    "targets have " + std::to_string(targets.rows()) + " rows, kernel has " + std::to_string(n_));
    RegressorSolution sol;
    sol.c = c_;
    sol.b = (s_.transpose() * targets).transpose() / s_sum_;
    Matrix centered = targets;
    centered.rowwise() -= sol.b.transpose();
    sol.A = llt_.solve(centered);
    return sol;
  }

  [[nodiscard]] double coefficient() const { return c_; }

 private:
  double c_;
  Index n_;
  Eigen::LLT<Matrix> llt_;
  Vector s_;
  double s_sum_ = 0.0;
};

inline RegressorSolution fit_kernel_regressor(const KernelCache& cache, const Matrix& targets, double c) {
  return KernelRegressor(cache, c).fit(targets);
}

/// H = c K A + 1 b^T.
inline Matrix regressor_outputs(const KernelCache& cache, const RegressorSolution& sol) {
  detail::require(sol.A.rows() == cache.size() && sol.A.cols() == sol.b.size(), ErrorKind::DimensionMismatch,
                  "regressor solution does not match kernel cache");
  Matrix h = sol.c * (cache.K * sol.A);
  h.rowwise() += sol.b.transpose();
  return h;
}

/// Residuals of the stationarity system; max-norm over both blocks.
inline double kkt_residual(const KernelCache& cache, const Matrix& targets, const RegressorSolution& sol) {
  Matrix r = sol.c * (cache.K * sol.A) + 0.5 * sol.A;
  r.rowwise() += sol.b.transpose();
  r -= targets;
  const double stationarity = r.cwiseAbs().maxCoeff();
  const double balance = sol.A.colwise().sum().cwiseAbs().maxCoeff();
  return std::max(stationarity, balance);
}

/// lambda * ||W||_F^2 expressed through the duals: W = c Phi^T A, so the
/// penalty is lambda c^2 tr(A^T K A).
inline double regressor_penalty(const KernelCache& cache, const RegressorSolution& sol, double lambda) {
  return lambda * sol.c * sol.c * (sol.A.transpose() * cache.K * sol.A).trace();
}

inline Matrix predict_scores(const KernelCache& cache, const RegressorSolution& sol, const Matrix& x_test) {
  detail::require(cache.train_features.rows() == cache.size() && cache.train_features.rows() > 0,
                  ErrorKind::InvalidInput, "kernel cache holds no training features");
  detail::require(x_test.cols() == cache.train_features.cols(), ErrorKind::DimensionMismatch,
                  "test features have " + std::to_string(x_test.cols()) + " columns, training had " +
                      std::to_string(cache.train_features.cols()));
  detail::require(sol.A.rows() == cache.size(), ErrorKind::DimensionMismatch, "solution does not match cache");
  const Matrix cross = detail::gaussian_cross_kernel(x_test, cache.train_features, cache.sigma);
  Matrix scores = sol.c * (cross * sol.A);
  scores.rowwise() += sol.b.transpose();
  return scores;
}

/// Exact minimizer of ||XW + 1b^T - T||^2 + lambda ||W||^2 with an
/// unpenalized bias. W is solved on column-centered data; b follows from
/// the bias stationarity condition b = (T^T 1 - W^T X^T 1) / n.
inline LinearSolution fit_linear_regressor(const Matrix& x, const Matrix& targets, double lambda) {
  detail::require_same_rows(x, targets, "fit_linear_regressor");
  detail::require(lambda > 0.0, ErrorKind::InvalidInput, "lambda must be positive");
  const double n = static_cast<double>(x.rows());
  const Vector x_mean = x.colwise().mean();
  const Vector t_mean = targets.colwise().mean();
  Matrix xc = x;
  xc.rowwise() -= x_mean.transpose();
  Matrix tc = targets;
  tc.rowwise() -= t_mean.transpose();

  Matrix gram = xc.transpose() * xc;
  gram.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericalFailure, "Cholesky factorization of X^T X + lambda I failed");
  }
  LinearSolution sol;
  sol.W = llt.solve(xc.transpose() * tc);
  sol.b = (targets.transpose() * Vector::Ones(x.rows()) - sol.W.transpose() * (x.transpose() * Vector::Ones(x.rows()))) / n;
  return sol;
}

inline Matrix linear_outputs(const Matrix& x, const LinearSolution& sol) {
  detail::require(x.cols() == sol.W.rows(), ErrorKind::DimensionMismatch,
                  "features have " + std::to_string(x.cols()) + " columns, model expects " +
                      std::to_string(sol.W.rows()));
  Matrix h = x * sol.W;
  h.rowwise() += sol.b.transpose();
  return h;
}

}  // namespace plcl

#endif  // PLCL_KERNEL_HPP
