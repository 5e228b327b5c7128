#ifndef PLCL_EVAL_HPP
#define PLCL_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "plcl/dataset.hpp"
#include "plcl/types.hpp"

namespace plcl {

inline double accuracy(const LabelVector& predicted, const LabelVector& truth) {
  detail::require(predicted.size() == truth.size(), ErrorKind::DimensionMismatch,
                  "accuracy: " + std::to_string(predicted.size()) + " predictions for " +
                      std::to_string(truth.size()) + " labels");
  detail::require(!truth.empty(), ErrorKind::EmptyInput, "accuracy of an empty label vector");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

/// Fraction of predictions within `tol` of the truth, reading class indices
/// as ordinal values (ages). The bound is inclusive.
inline double mae_k_accuracy(const LabelVector& predicted, const LabelVector& truth, double tol) {
  detail::require(predicted.size() == truth.size(), ErrorKind::DimensionMismatch, "mae_k_accuracy: length mismatch");
  detail::require(!truth.empty(), ErrorKind::EmptyInput, "mae_k_accuracy of an empty label vector");
  detail::require(tol >= 0.0, ErrorKind::InvalidInput, "mae_k_accuracy: tolerance must be nonnegative");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    hits += std::abs(static_cast<double>(predicted[i] - truth[i])) <= tol ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

/// PL-KNN: sum the candidate vectors of the k nearest training samples and
/// predict the argmax (lowest index on ties).
inline LabelVector pl_knn_fit_predict(const PartialDataset& train, const Matrix& x_test, int k) {
  detail::require(k >= 1, ErrorKind::InvalidInput, "pl_knn: k must be >= 1");
  detail::require(x_test.cols() == train.X.cols(), ErrorKind::DimensionMismatch,
                  "pl_knn: test features have " + std::to_string(x_test.cols()) + " columns, training has " +
                      std::to_string(train.X.cols()));
  const Index n = train.size();
  const auto keep = static_cast<std::size_t>(std::min<Index>(k, n));
  const Matrix& y = train.Y.matrix();
  Matrix votes = Matrix::Zero(x_test.rows(), y.cols());
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n));
  for (Index t = 0; t < x_test.rows(); ++t) {
    for (Index i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = {(train.X.row(i) - x_test.row(t)).squaredNorm(), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(keep), dist.end());
    for (std::size_t s = 0; s < keep; ++s) votes.row(t) += y.row(dist[s].second);
  }
  return detail::argmax_rows(votes);
}

enum class Verdict { Win, Tie, Loss };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Win: return "win";
    case Verdict::Tie: return "tie";
    case Verdict::Loss: return "loss";
  }
  return "tie";
}

/// Two-sided Student t critical value with `df` degrees of freedom.
inline double t_critical(double df, double significance) {
  detail::require(df > 0.0, ErrorKind::InvalidInput, "t_critical: df must be positive");
  detail::require(significance > 0.0 && significance < 1.0, ErrorKind::InvalidInput,
                  "t_critical: significance must lie in (0,1)");
  const boost::math::students_t dist(df);
  return boost::math::quantile(boost::math::complement(dist, significance / 2.0));
}

struct TTestResult {
  Verdict verdict = Verdict::Tie;
  double t = 0.0;
  double critical = 0.0;
  double mean_difference = 0.0;
  double sd_difference = 0.0;
};

/// Paired two-sided t-test on d = a - b, reported from a's perspective.
/// Constant differences skip the statistic: zero -> tie, else by sign.
inline TTestResult paired_t_test_detailed(const std::vector<double>& a, const std::vector<double>& b,
                                          double significance = 0.05) {
  detail::require(a.size() == b.size(), ErrorKind::DimensionMismatch, "paired_t_test: samples differ in length");
  detail::require(a.size() >= 2, ErrorKind::InvalidInput, "paired_t_test needs at least 2 pairs");
  detail::require(significance > 0.0 && significance < 1.0, ErrorKind::InvalidInput,
                  "paired_t_test: significance must lie in (0,1)");
  const auto m = static_cast<double>(a.size());
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];

  TTestResult result;
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= m;
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  result.mean_difference = mean;
  result.sd_difference = std::sqrt(ss / (m - 1.0));
  result.critical = t_critical(m - 1.0, significance);

  const bool constant = std::all_of(d.begin(), d.end(), [&](double v) { return v == d.front(); });
  if (constant) {
    const double value = d.front();
    result.verdict = value > 0.0 ? Verdict::Win : (value < 0.0 ? Verdict::Loss : Verdict::Tie);
    result.t = value == 0.0 ? 0.0 : std::copysign(HUGE_VAL, value);
    return result;
  }
  result.t = mean / (result.sd_difference / std::sqrt(m));
  if (result.t > result.critical) {
    result.verdict = Verdict::Win;
  } else if (result.t < -result.critical) {
    result.verdict = Verdict::Loss;
  }
  return result;
}

inline Verdict paired_t_test(const std::vector<double>& a, const std::vector<double>& b, double significance = 0.05) {
  return paired_t_test_detailed(a, b, significance).verdict;
}

struct WinTieLoss {
  int win = 0;
  int tie = 0;
  int loss = 0;

  [[nodiscard]] int total() const { return win + tie + loss; }
  friend bool operator==(const WinTieLoss&, const WinTieLoss&) = default;
};

inline WinTieLoss aggregate_wtl(const std::vector<Verdict>& verdicts) {
  detail::require(!verdicts.empty(), ErrorKind::EmptyInput, "aggregate_wtl of an empty verdict list");
  WinTieLoss counts;
  for (Verdict v : verdicts) {
    switch (v) {
      case Verdict::Win: ++counts.win; break;
      case Verdict::Tie: ++counts.tie; break;
      case Verdict::Loss: ++counts.loss; break;
    }
  }
  return counts;
}

struct RunResult {
  std::string method;
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;
  double transductive_accuracy = 0.0;
  std::map<double, double> mae_k;  // tolerance -> accuracy
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Sample mean and (n-1)-denominator standard deviation; std = 0 for n = 1.
inline MeanStd mean_std(const std::vector<double>& values) {
  detail::require(!values.empty(), ErrorKind::EmptyInput, "mean_std of an empty sample");
  MeanStd out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

}  // namespace plcl

#endif  // PLCL_EVAL_HPP
