#ifndef PLCL_GRAPH_HPP
#define PLCL_GRAPH_HPP

// KNN support and the column-stochastic local reconstruction graph G.
// Column i of G holds the weights reconstructing sample i from its
// neighbors; only entries on the KNN support may be nonzero.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plcl/qp.hpp"
#include "plcl/types.hpp"

namespace plcl {

struct GraphSupport {
  /// neighbors[j] lists the samples allowed to reconstruct sample j,
  /// nearest first. u_ij = 1 iff i is in neighbors[j].
  std::vector<std::vector<Index>> neighbors;
  int k = 0;

  [[nodiscard]] Index size() const { return static_cast<Index>(neighbors.size()); }

  [[nodiscard]] Matrix mask() const {
    const Index n = size();
    Matrix u = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i : neighbors[static_cast<std::size_t>(j)]) u(i, j) = 1.0;
    }
    return u;
  }
};

struct SimilarityGraph {
  SparseMatrix G;

  [[nodiscard]] Index size() const { return G.rows(); }

  /// Nonzero-pattern-free view of column j restricted to `neighbors`.
  [[nodiscard]] Vector column_weights(Index j, const std::vector<Index>& neighbors) const {
    Vector w = Vector::Zero(static_cast<Index>(neighbors.size()));
    for (std::size_t t = 0; t < neighbors.size(); ++t) w[static_cast<Index>(t)] = G.coeff(neighbors[t], j);
    return w;
  }
};

/// Diagonal shift applied to every Gram matrix before solving; duplicated
/// neighbors make the Gram matrix exactly singular.
inline constexpr double kGramRidge = 1e-12;

inline GraphSupport knn_mask(const Matrix& x, int k) {
  detail::require(k >= 1, ErrorKind::InvalidInput, "knn_mask: k must be >= 1, got " + std::to_string(k));
  const Index n = x.rows();
  detail::require(n >= 2, ErrorKind::InvalidInput, "knn_mask needs at least 2 samples");
  const auto keep = static_cast<std::size_t>(std::min<Index>(k, n - 1));

  GraphSupport support;
  support.k = k;
  support.neighbors.resize(static_cast<std::size_t>(n));
  std::vector<std::pair<double, Index>> dist;
  dist.reserve(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    dist.clear();
    for (Index i = 0; i < n; ++i) {
      if (i != j) dist.emplace_back((x.row(i) - x.row(j)).squaredNorm(), i);
    }
    // pair ordering breaks distance ties by the lower index
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(keep), dist.end());
    auto& column = support.neighbors[static_cast<std::size_t>(j)];
    column.resize(keep);
    for (std::size_t t = 0; t < keep; ++t) column[t] = dist[t].second;
  }
  return support;
}

/// gamma * B^x + mu * B^p for sample i, where B^z = D D^T and the rows of D
/// are z_i - z_j over the neighbors j of i. Pass an empty `labels` to drop
/// the label term.
inline Matrix column_hessian(const Matrix& x, const Matrix& labels, Index i, const std::vector<Index>& neighbors,
                             double gamma, double mu) {
  const auto k = static_cast<Index>(neighbors.size());
  Matrix dx(k, x.cols());
  for (Index t = 0; t < k; ++t) dx.row(t) = x.row(i) - x.row(neighbors[static_cast<std::size_t>(t)]);
  Matrix h = gamma * (dx * dx.transpose());
  if (mu != 0.0 && labels.size() > 0) {
    Matrix dp(k, labels.cols());
    for (Index t = 0; t < k; ++t) dp.row(t) = labels.row(i) - labels.row(neighbors[static_cast<std::size_t>(t)]);
    h.noalias() += mu * (dp * dp.transpose());
  }
  h.diagonal().array() += kGramRidge;
  return h;
}

namespace detail {

inline SimilarityGraph solve_graph_columns(const Matrix& x, const Matrix& labels, const GraphSupport& support,
                                           double gamma, double mu, const SimilarityGraph* previous) {
  const Index n = x.rows();
  require(support.size() == n, ErrorKind::DimensionMismatch, "graph support does not match sample count");
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(std::max(support.k, 1)));
  for (Index i = 0; i < n; ++i) {
    const auto& nbrs = support.neighbors[static_cast<std::size_t>(i)];
    const auto k = static_cast<Index>(nbrs.size());
    const Matrix h = column_hessian(x, labels, i, nbrs, gamma, mu);
    std::optional<Vector> warm;
    if (previous != nullptr) warm = previous->column_weights(i, nbrs);
    const QpSolveReport report = solve_small_qp(h, Vector::Ones(k), SmallQpOptions{}, warm);
    for (Index t = 0; t < k; ++t) {
      if (report.solution[t] != 0.0) triplets.emplace_back(nbrs[static_cast<std::size_t>(t)], i, report.solution[t]);
    }
  }
  SimilarityGraph graph;
  graph.G.resize(n, n);
  graph.G.setFromTriplets(triplets.begin(), triplets.end());
  graph.G.makeCompressed();
  return graph;
}

}  // namespace detail

/// Feature-only reconstruction graph.
inline SimilarityGraph init_graph(const Matrix& x, const GraphSupport& support) {
  return detail::solve_graph_columns(x, Matrix(), support, 1.0, 0.0, nullptr);
}

/// Joint feature + label reconstruction graph. When `previous` is given its
/// columns warm-start the column solves, which makes the update monotone in
/// the graph objective.
inline SimilarityGraph update_graph(const Matrix& x, const Matrix& p, const GraphSupport& support, double gamma,
                                    double mu, const SimilarityGraph* previous = nullptr) {
  detail::require(gamma >= 0.0 && mu >= 0.0 && (gamma > 0.0 || mu > 0.0), ErrorKind::InvalidInput,
                  "update_graph: gamma and mu must be nonnegative and not both zero");
  detail::require_same_rows(x, p, "update_graph");
  return detail::solve_graph_columns(x, p, support, gamma, mu, previous);
}

/// ||Z^T - Z^T G||_F^2.
inline double reconstruction_error(const Matrix& z, const SimilarityGraph& graph) {
  const Matrix residual = z - Matrix(graph.G.transpose() * z);
  return residual.squaredNorm();
}

inline double graph_objective(const Matrix& x, const Matrix& p, const SimilarityGraph& graph, double gamma,
                              double mu) {
  double value = 0.0;
  if (gamma != 0.0) value += gamma * reconstruction_error(x, graph);
  if (mu != 0.0) value += mu * reconstruction_error(p, graph);
  return value;
}

/// Throws InvariantViolation unless G is nonnegative, supported on U, and
/// has unit column sums.
inline void check_graph(const SimilarityGraph& graph, const GraphSupport& support, double tol = 1e-8) {
  const Index n = graph.size();
  detail::require(support.size() == n, ErrorKind::InvariantViolation, "graph and support sizes differ");
  for (Index j = 0; j < n; ++j) {
    const auto& nbrs = support.neighbors[static_cast<std::size_t>(j)];
    double sum = 0.0;
    Index nnz = 0;
    for (SparseMatrix::InnerIterator it(graph.G, j); it; ++it) {
      const double g = it.value();
      const bool on_support = std::find(nbrs.begin(), nbrs.end(), it.row()) != nbrs.end();
      if (g < -tol || g > 1.0 + tol || (!on_support && std::abs(g) > tol)) {
        throw Error(ErrorKind::InvariantViolation,
                    "graph entry (" + std::to_string(it.row()) + "," + std::to_string(j) + ") = " + std::to_string(g));
      }
      if (g != 0.0) ++nnz;
      sum += g;
    }
    if (std::abs(sum - 1.0) > tol || nnz > static_cast<Index>(nbrs.size())) {
      throw Error(ErrorKind::InvariantViolation, "graph column " + std::to_string(j) + " sums to " + std::to_string(sum));
    }
  }
}

}  // namespace plcl

#endif  // PLCL_GRAPH_HPP
