#ifndef PLCL_MODEL_HPP
#define PLCL_MODEL_HPP

// Partial-label learning with a complementary classifier.
//
// The model minimizes, over (W, b), (W^, b^), P, Q and G,
//
//   ||H - P||^2 + beta ||1 - P - Q||^2 + alpha ||H^ - Q||^2
//   + mu ||P^T - P^T G||^2 + gamma ||X^T - X^T G||^2
//   + lambda (||W||^2 + ||W^||^2)
//
// with H = XW + 1b^T (kernelized as cKA + 1b^T), H^ the complementary
// classifier's output, rows of P on the capped simplex below Y, 1 - Y <= Q
// <= 1 and columns of G on the capped simplex below the KNN mask. Each outer
// iteration updates (A,b), (A^,b^), Q, G, P in that order; every update is
// an exact block minimization, so the objective never increases.

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "plcl/dataset.hpp"
#include "plcl/graph.hpp"
#include "plcl/kernel.hpp"
#include "plcl/qp.hpp"
#include "plcl/types.hpp"

namespace plcl {

struct HyperParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double mu = 1.0;
  double lambda = 0.03;
  int k = 10;
  double tol = 1e-4;
  int max_outer_iters = 50;
  bool use_kernel = true;
  bool use_complementary = true;
  bool use_graph = true;
  BlockQpOptions p_solver{};

  void validate() const {
    const auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    detail::require(nonneg(alpha) && nonneg(beta) && nonneg(gamma) && nonneg(mu), ErrorKind::InvalidInput,
                    "alpha, beta, gamma, mu must be finite and nonnegative");
    detail::require(std::isfinite(lambda) && lambda > 0.0, ErrorKind::InvalidInput, "lambda must be positive");
    detail::require(k >= 1, ErrorKind::InvalidInput, "k must be >= 1");
    detail::require(tol > 0.0, ErrorKind::InvalidInput, "tol must be positive");
    detail::require(max_outer_iters >= 1, ErrorKind::InvalidInput, "max_outer_iters must be >= 1");
    if (use_complementary) {
      detail::require(alpha + beta > 0.0, ErrorKind::InvalidInput, "alpha + beta must be positive");
    }
    if (use_graph) {
      detail::require(gamma + mu > 0.0, ErrorKind::InvalidInput, "gamma + mu must be positive with the graph on");
    }
  }
};

/// Dual solution (kernel mode) or primal weights (linear mode).
using ClassifierSolution = std::variant<RegressorSolution, LinearSolution>;

/// Everything the alternating loop updates.
struct ModelState {
  ClassifierSolution ordinary;
  ClassifierSolution complementary;
  Matrix P;
  Matrix Q;
  std::optional<SimilarityGraph> graph;
};

struct ObjectiveTerms {
  double fit = 0.0;            // ||H - P||^2
  double adversarial = 0.0;    // beta ||1 - P - Q||^2
  double complementary = 0.0;  // alpha ||H^ - Q||^2
  double label_graph = 0.0;    // mu ||P^T - P^T G||^2
  double feature_graph = 0.0;  // gamma ||X^T - X^T G||^2
  double penalty = 0.0;        // lambda (||W||^2 + ||W^||^2)

  [[nodiscard]] double total() const {
    return fit + adversarial + complementary + label_graph + feature_graph + penalty;
  }
};

struct FittedModel {
  HyperParams params;
  ModelState state;
  /// Present in kernel mode.
  std::optional<KernelCache> kernel;
  /// Training features; duplicated from the cache in kernel mode for
  /// convenience in linear mode.
  Matrix train_features;
  std::optional<GraphSupport> support;
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;

  [[nodiscard]] Index num_labels() const { return state.P.cols(); }
};

struct FitOptions {
  /// Record the objective before the first update and after every block
  /// update (five per outer iteration when all components are on).
  bool trace_blocks = false;
  /// Verify P, Q, G feasibility after every block update.
  bool check_invariants = true;
};

struct FitDiagnostics {
  std::vector<double> block_trace;
  std::vector<std::string> block_names;
};

// ---------------------------------------------------------------------------
// Classifier helpers

inline double kernel_coefficient(double weight, double lambda) { return weight / (2.0 * lambda); }

inline Matrix classifier_outputs(const ClassifierSolution& sol, const KernelCache* kernel, const Matrix& x) {
  if (const auto* dual = std::get_if<RegressorSolution>(&sol)) {
    detail::require(kernel != nullptr, ErrorKind::InvalidInput, "kernel solution without a kernel cache");
    return regressor_outputs(*kernel, *dual);
  }
  return linear_outputs(x, std::get<LinearSolution>(sol));
}

inline double classifier_penalty(const ClassifierSolution& sol, const KernelCache* kernel, double lambda) {
  if (const auto* dual = std::get_if<RegressorSolution>(&sol)) {
    if (dual->c == 0.0) return 0.0;
    return regressor_penalty(*kernel, *dual, lambda);
  }
  return lambda * std::get<LinearSolution>(sol).W.squaredNorm();
}

inline ClassifierSolution zero_classifier(bool kernel_mode, Index n, Index q, Index l, double c) {
  if (kernel_mode) return RegressorSolution{Matrix::Zero(n, l), Vector::Zero(l), c};
  return LinearSolution{Matrix::Zero(q, l), Vector::Zero(l)};
}

// ---------------------------------------------------------------------------
// Initialization

/// q_ij = 1 / (l - |S_i|) for non-candidates, 0 for candidates.
inline Matrix init_q(const PartialLabelMatrix& y) {
  const Index l = y.labels();
  Matrix q = Matrix::Zero(y.rows(), l);
  for (Index i = 0; i < y.rows(); ++i) {
    const int non_candidates = static_cast<int>(l) - y.candidate_count(i);
    if (non_candidates == 0) continue;
    for (Index j = 0; j < l; ++j) {
      if (!y.is_candidate(i, j)) q(i, j) = 1.0 / static_cast<double>(non_candidates);
    }
  }
  return q;
}

inline Matrix uniform_over_candidates(const PartialLabelMatrix& y) {
  Matrix p = y.matrix();
  for (Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
  return p;
}

/// X -> 2 (I - G)(I - G)^T X, applied column by column in O(l nnz(G)).
inline Matrix apply_graph_laplacian(const SparseMatrix& g, const Matrix& x) {
  const Matrix w = x - Matrix(g.transpose() * x);
  return 2.0 * (w - Matrix(g * w));
}

/// min ||P^T - P^T G||^2 over the candidate-capped simplices, started from
/// the uniform-over-candidates matrix.
inline Matrix init_p(const PartialLabelMatrix& y, const SimilarityGraph* graph, double mu_weight = 1.0,
                     const BlockQpOptions& options = {}) {
  Matrix start = uniform_over_candidates(y);
  if (graph == nullptr || mu_weight == 0.0) return start;
  detail::require(graph->size() == y.rows(), ErrorKind::DimensionMismatch, "init_p: graph size mismatch");
  const SparseMatrix& g = graph->G;
  const QuadraticOperator op = [&g, mu_weight](const Matrix& x) { return Matrix(mu_weight * apply_graph_laplacian(g, x)); };
  const Matrix linear = Matrix::Zero(y.rows(), y.labels());
  return solve_projected_gradient_qp(op, linear, y.matrix(), options, start).solution;
}

// ---------------------------------------------------------------------------
// Block updates

/// Q = min(1, max(Y^, (alpha H^ + beta (1 - P)) / (alpha + beta))).
inline Matrix update_q(const Matrix& h_hat, const Matrix& p, const Matrix& y_hat, double alpha, double beta) {
  detail::require(alpha + beta > 0.0, ErrorKind::InvalidInput, "update_q: alpha + beta must be positive");
  detail::require(h_hat.rows() == p.rows() && h_hat.cols() == p.cols() && y_hat.rows() == p.rows() &&
                      y_hat.cols() == p.cols(),
                  ErrorKind::DimensionMismatch, "update_q: shape mismatch");
  Matrix q(p.rows(), p.cols());
  for (Index j = 0; j < p.cols(); ++j) {
    for (Index i = 0; i < p.rows(); ++i) {
      const double raw = (alpha * h_hat(i, j) + beta * (1.0 - p(i, j))) / (alpha + beta);
      q(i, j) = std::min(1.0, std::max(y_hat(i, j), raw));
    }
  }
  return q;
}

/// Value of ||H - P||^2 + beta ||E - Q - P||^2 + mu ||P^T - P^T G||^2.
inline double p_subproblem_objective(const Matrix& p, const Matrix& h, const Matrix* q, const SimilarityGraph* graph,
                                     double beta, double mu) {
  double value = (h - p).squaredNorm();
  if (q != nullptr && beta != 0.0) value += beta * ((1.0 - p.array() - q->array()).matrix()).squaredNorm();
  if (graph != nullptr && mu != 0.0) value += mu * reconstruction_error(p, *graph);
  return value;
}

/// Minimizes the P-subproblem. `q` / `graph` may be null when the
/// complementary classifier / graph are disabled. `current` warm-starts the
/// solver; the result never scores worse than it.
inline Matrix update_p(const Matrix& h, const Matrix* q, const SimilarityGraph* graph, const PartialLabelMatrix& y,
                       double beta, double mu, const std::optional<Matrix>& current = std::nullopt,
                       const BlockQpOptions& options = {}) {
  detail::require(beta >= 0.0 && mu >= 0.0, ErrorKind::InvalidInput, "update_p: beta and mu must be nonnegative");
  detail::require(h.rows() == y.rows() && h.cols() == y.labels(), ErrorKind::DimensionMismatch,
                  "update_p: H shape does not match Y");
  const double b = (q != nullptr) ? beta : 0.0;
  Matrix target = h;
  if (q != nullptr && b != 0.0) target += b * (1.0 - q->array()).matrix();

  if (graph == nullptr || mu == 0.0) {
    return project_rows(target / (1.0 + b), y.matrix());
  }
  const double diag = 2.0 * (1.0 + b);
  const SparseMatrix& g = graph->G;
  const QuadraticOperator op = [&g, diag, mu](const Matrix& x) {
    return Matrix(diag * x + mu * apply_graph_laplacian(g, x));
  };
  const Matrix linear = 2.0 * target;
  const Matrix start = current ? *current : project_rows(target / (1.0 + b), y.matrix());
  return solve_projected_gradient_qp(op, linear, y.matrix(), options, start).solution;
}

// ---------------------------------------------------------------------------
// Objective

inline ObjectiveTerms objective_terms(const ModelState& state, const Matrix& x, const KernelCache* kernel,
                                      const HyperParams& params) {
  ObjectiveTerms terms;
  const Matrix h = classifier_outputs(state.ordinary, kernel, x);
  terms.fit = (h - state.P).squaredNorm();
  terms.penalty = classifier_penalty(state.ordinary, kernel, params.lambda);
  if (params.use_complementary) {
    terms.adversarial = params.beta * (1.0 - state.P.array() - state.Q.array()).matrix().squaredNorm();
    if (params.alpha != 0.0) {
      const Matrix h_hat = classifier_outputs(state.complementary, kernel, x);
      terms.complementary = params.alpha * (h_hat - state.Q).squaredNorm();
      terms.penalty += classifier_penalty(state.complementary, kernel, params.lambda);
    }
  }
  if (params.use_graph && state.graph) {
    if (params.mu != 0.0) terms.label_graph = params.mu * reconstruction_error(state.P, *state.graph);
    if (params.gamma != 0.0) terms.feature_graph = params.gamma * reconstruction_error(x, *state.graph);
  }
  return terms;
}

inline double objective(const ModelState& state, const Matrix& x, const KernelCache* kernel, const HyperParams& params) {
  return objective_terms(state, x, kernel, params).total();
}

// ---------------------------------------------------------------------------
// Invariants

inline void check_confidences(const Matrix& p, const Matrix* q, const PartialLabelMatrix& y, double tol = 1e-8) {
  const Matrix& ym = y.matrix();
  for (Index i = 0; i < p.rows(); ++i) {
    const double sum = p.row(i).sum();
    if (std::abs(sum - 1.0) > tol) {
      throw Error(ErrorKind::InvariantViolation, "P row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
    for (Index j = 0; j < p.cols(); ++j) {
      if (p(i, j) < -tol || p(i, j) > ym(i, j) + tol) {
        throw Error(ErrorKind::InvariantViolation, "P(" + std::to_string(i) + "," + std::to_string(j) +
                                                       ") = " + std::to_string(p(i, j)) + " outside [0, y]");
      }
      if (q != nullptr) {
        const double lo = 1.0 - ym(i, j);
        if ((*q)(i, j) < lo - tol || (*q)(i, j) > 1.0 + tol) {
          throw Error(ErrorKind::InvariantViolation, "Q(" + std::to_string(i) + "," + std::to_string(j) +
                                                         ") = " + std::to_string((*q)(i, j)) + " outside [1-y, 1]");
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Fit

namespace detail {

inline void validate_training_data(const PartialDataset& data) {
  data.validate();
  require(data.size() >= 2, ErrorKind::InvalidInput, "training needs at least 2 samples");
  require(data.num_labels() >= 1, ErrorKind::InvalidInput, "training needs at least one label");
}

}  // namespace detail

inline FittedModel fit(const PartialDataset& data, const HyperParams& params, const FitOptions& options = {},
                       FitDiagnostics* diagnostics = nullptr) {
  params.validate();
  detail::validate_training_data(data);

  const Matrix& x = data.X;
  const PartialLabelMatrix& y = data.Y;
  const Index n = x.rows();
  const Index q_dim = x.cols();
  const Index l = y.labels();
  const Matrix y_hat = y.complement();
  const bool complementary_on = params.use_complementary;
  const bool complementary_fitted = complementary_on && params.alpha > 0.0;

  FittedModel model;
  model.params = params;
  model.train_features = x;

  std::optional<KernelRegressor> ordinary_solver;
  std::optional<KernelRegressor> complementary_solver;
  const double c_ordinary = kernel_coefficient(1.0, params.lambda);
  const double c_complementary = kernel_coefficient(params.alpha, params.lambda);
  if (params.use_kernel) {
    model.kernel = gaussian_kernel(x);
    ordinary_solver.emplace(*model.kernel, c_ordinary);
    if (complementary_fitted) complementary_solver.emplace(*model.kernel, c_complementary);
  }
  const KernelCache* kernel = model.kernel ? &*model.kernel : nullptr;

  ModelState& state = model.state;
  state.ordinary = zero_classifier(params.use_kernel, n, q_dim, l, c_ordinary);
  state.complementary = zero_classifier(params.use_kernel, n, q_dim, l, complementary_fitted ? c_complementary : 0.0);

  if (params.use_graph) {
    model.support = knn_mask(x, params.k);
    state.graph = init_graph(x, *model.support);
  }
  state.P = init_p(y, state.graph ? &*state.graph : nullptr, 1.0, params.p_solver);
  // init_q puts 1/(l - |S_i|) on each non-candidate, below the lower bound
  // 1 - Y once a sample has two or more; the start is clamped into the box
  // so every block update begins from a feasible point.
  state.Q = complementary_on ? Matrix(init_q(y).cwiseMax(y_hat)) : Matrix::Zero(n, l);

  const auto verify = [&] {
    if (!options.check_invariants) return;
    check_confidences(state.P, complementary_on ? &state.Q : nullptr, y);
    if (state.graph) check_graph(*state.graph, *model.support);
  };
  const auto record = [&](const char* name) {
    verify();
    if (diagnostics != nullptr && options.trace_blocks) {
      diagnostics->block_trace.push_back(objective(state, x, kernel, params));
      diagnostics->block_names.emplace_back(name);
    }
  };
  record("init");

  for (int iter = 0; iter < params.max_outer_iters; ++iter) {
    const Matrix p_old = state.P;

    if (ordinary_solver) {
      state.ordinary = ordinary_solver->fit(state.P);
    } else {
      state.ordinary = fit_linear_regressor(x, state.P, params.lambda);
    }
    record("classifier");

    if (complementary_on) {
      Matrix h_hat = Matrix::Zero(n, l);
      if (complementary_fitted) {
        if (complementary_solver) {
          state.complementary = complementary_solver->fit(state.Q);
        } else {
          state.complementary = fit_linear_regressor(x, state.Q, params.lambda / params.alpha);
        }
        record("complementary");
        h_hat = classifier_outputs(state.complementary, kernel, x);
      }
      state.Q = update_q(h_hat, state.P, y_hat, params.alpha, params.beta);
      record("q");
    }

    if (state.graph) {
      state.graph = update_graph(x, state.P, *model.support, params.gamma, params.mu, &*state.graph);
      record("graph");
    }

    const Matrix h = classifier_outputs(state.ordinary, kernel, x);
    state.P = update_p(h, complementary_on ? &state.Q : nullptr, state.graph ? &*state.graph : nullptr, y,
                       params.beta, params.use_graph ? params.mu : 0.0, state.P, params.p_solver);
    record("p");

    model.objective_trace.push_back(objective(state, x, kernel, params));
    model.iterations = iter + 1;

    const double base = p_old.norm();
    const double change = (state.P - p_old).norm() / (base > 0.0 ? base : 1.0);
    if (change < params.tol) {
      model.converged = true;
      break;
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Prediction

inline Matrix decision_scores(const FittedModel& model, const Matrix& x_test) {
  detail::require(x_test.cols() == model.train_features.cols(), ErrorKind::DimensionMismatch,
                  "test features have " + std::to_string(x_test.cols()) + " columns, model expects " +
                      std::to_string(model.train_features.cols()));
  if (const auto* dual = std::get_if<RegressorSolution>(&model.state.ordinary)) {
    return predict_scores(*model.kernel, *dual, x_test);
  }
  return linear_outputs(x_test, std::get<LinearSolution>(model.state.ordinary));
}

inline LabelVector predict(const FittedModel& model, const Matrix& x_test) {
  return detail::argmax_rows(decision_scores(model, x_test));
}

/// argmax of each row of the final confidence matrix.
inline LabelVector transductive_labels(const FittedModel& model) { return detail::argmax_rows(model.state.P); }

}  // namespace plcl

#endif  // PLCL_MODEL_HPP
