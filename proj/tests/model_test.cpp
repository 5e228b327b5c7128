#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <variant>

#include "oracles.hpp"
#include "plcl/data.hpp"
#include "plcl/eval.hpp"
#include "plcl/model.hpp"
#include "test_support.hpp"

using plcl::ErrorKind;
using plcl::Index;
using plcl::Matrix;
using plcl::Vector;

namespace {

plcl::PartialLabelMatrix rows(std::initializer_list<std::initializer_list<double>> values) {
  Matrix y(static_cast<Index>(values.size()), static_cast<Index>(values.begin()->size()));
  Index i = 0;
  for (const auto& row : values) {
    Index j = 0;
    for (double v : row) y(i, j++) = v;
    ++i;
  }
  return plcl::PartialLabelMatrix(y);
}

plcl::PartialDataset corrupted_blobs(Index n, int l, Index q, double separation, std::uint64_t seed, int r = 1) {
  plcl::PartialDataset data = plcl::make_blobs(n, l, q, separation, seed);
  plcl::CorruptionSpec spec;
  spec.p = 1.0;
  spec.r = r;
  spec.seed = seed + 1000;
  data.Y = plcl::synthesize_candidates(*data.true_labels, l, spec);
  return data;
}

plcl::PartialDataset random_instance(std::mt19937_64& rng, Index n, Index l, Index q) {
  plcl::PartialDataset data;
  data.X = plcl::oracle::random_matrix(n, q, rng);
  data.Y = plcl::PartialLabelMatrix(plcl::testing::random_candidates(n, l, rng));
  return data;
}

plcl::SimilarityGraph graph_from_dense(const Matrix& g) {
  plcl::SimilarityGraph graph;
  graph.G = g.sparseView();
  return graph;
}

}  // namespace

TEST(InitQ, Examples) {
  const Matrix q = plcl::init_q(rows({{1, 1, 0, 0}}));
  EXPECT_EQ(q, (Matrix(1, 4) << 0, 0, 0.5, 0.5).finished());
  const Matrix q3 = plcl::init_q(rows({{0, 1, 0}}));
  EXPECT_EQ(q3, (Matrix(1, 3) << 0.5, 0, 0.5).finished());
  const Matrix full = plcl::init_q(rows({{1, 1, 1}}));
  EXPECT_EQ(full, Matrix::Zero(1, 3));
}

TEST(InitP, OneHotRowsAreFixed) {
  const auto y = plcl::PartialLabelMatrix::one_hot({2, 0, 1, 1}, 3);
  const Matrix x = (Matrix(4, 1) << 0, 1, 2, 3).finished();
  const auto support = plcl::knn_mask(x, 2);
  const auto graph = plcl::init_graph(x, support);
  EXPECT_EQ(plcl::init_p(y, &graph), y.matrix());
}

TEST(InitP, EmptyGraphKeepsUniformStart) {
  const auto y = rows({{1, 1, 0}, {1, 1, 1}, {0, 1, 1}});
  const auto graph = graph_from_dense(Matrix::Zero(3, 3));
  const Matrix p = plcl::init_p(y, &graph);
  EXPECT_LE(plcl::testing::max_abs_diff(p, plcl::uniform_over_candidates(y)), 1e-8);
}

TEST(InitP, TwoMutualNeighbors) {
  const auto y = rows({{1, 1}, {1, 1}});
  const auto graph = graph_from_dense((Matrix(2, 2) << 0, 1, 1, 0).finished());
  const Matrix p = plcl::init_p(y, &graph);
  EXPECT_LE(plcl::testing::max_abs_diff(p, Matrix::Constant(2, 2, 0.5)), 1e-12);
  EXPECT_EQ(plcl::reconstruction_error(p, graph), 0.0);
}

TEST(InitP, FeasibleAndNoWorseThanUniform) {
  std::mt19937_64 rng(41);
  const auto data = random_instance(rng, 30, 4, 3);
  const auto support = plcl::knn_mask(data.X, 5);
  const auto graph = plcl::init_graph(data.X, support);
  const Matrix p = plcl::init_p(data.Y, &graph);
  EXPECT_NO_THROW(plcl::check_confidences(p, nullptr, data.Y));
  EXPECT_LE(plcl::reconstruction_error(p, graph),
            plcl::reconstruction_error(plcl::uniform_over_candidates(data.Y), graph) + 1e-12);
}

TEST(UpdateQ, Examples) {
  const Matrix one = Matrix::Ones(1, 1);
  const Matrix zero = Matrix::Zero(1, 1);
  EXPECT_NEAR(plcl::update_q(0.8 * one, 0.4 * one, zero, 1.0, 1.0)(0, 0), 0.7, 1e-15);
  EXPECT_EQ(plcl::update_q(1.3 * one, zero, zero, 1.0, 0.0)(0, 0), 1.0);
  EXPECT_EQ(plcl::update_q(0.4 * one, one, one, 1.0, 1.0)(0, 0), 1.0);
  EXPECT_EQ(plcl::update_q(-2.0 * one, one, zero, 1.0, 1.0)(0, 0), 0.0);
}

TEST(UpdateQ, ExhaustiveGrid) {
  // Every (H^, P, y^) on a 0.1 grid; H^ spans [-0.5, 1.5] to exercise both clamps.
  const int hn = 21;
  const int pn = 11;
  Matrix h(hn * pn * 2, 1);
  Matrix p(hn * pn * 2, 1);
  Matrix yh(hn * pn * 2, 1);
  Index r = 0;
  for (int a = 0; a < hn; ++a) {
    for (int b = 0; b < pn; ++b) {
      for (int c = 0; c < 2; ++c) {
        h(r, 0) = -0.5 + 0.1 * a;
        p(r, 0) = 0.1 * b;
        yh(r, 0) = c;
        ++r;
      }
    }
  }
  for (double alpha : {0.0, 0.5, 1.0, 2.0}) {
    for (double beta : {0.0, 0.1, 1.0, 4.0}) {
      if (alpha + beta == 0.0) continue;
      const Matrix q = plcl::update_q(h, p, yh, alpha, beta);
      for (Index i = 0; i < r; ++i) {
        double expected = (alpha * h(i, 0) + beta * (1.0 - p(i, 0))) / (alpha + beta);
        if (expected < yh(i, 0)) expected = yh(i, 0);
        if (expected > 1.0) expected = 1.0;
        ASSERT_EQ(q(i, 0), expected);
      }
    }
  }
}

TEST(UpdateQ, Errors) {
  const Matrix z = Matrix::Zero(2, 2);
  EXPECT_PLCL_ERROR(plcl::update_q(z, z, z, 0.0, 0.0), ErrorKind::InvalidInput);
  EXPECT_PLCL_ERROR(plcl::update_q(z, Matrix::Zero(3, 2), z, 1.0, 1.0), ErrorKind::DimensionMismatch);
}

TEST(UpdateP, WithoutGraphIsProjection) {
  std::mt19937_64 rng(43);
  const Matrix y = plcl::testing::random_candidates(8, 4, rng);
  const plcl::PartialLabelMatrix ym(y);
  const Matrix h = plcl::oracle::random_matrix(8, 4, rng);
  const Matrix q = plcl::oracle::random_matrix(8, 4, rng).cwiseAbs();
  const double beta = 0.7;
  const Matrix p = plcl::update_p(h, &q, nullptr, ym, beta, 0.0);
  const Matrix target = (h + beta * (1.0 - q.array()).matrix()) / (1.0 + beta);
  EXPECT_EQ(p, plcl::project_rows(target, y));
}

TEST(UpdateP, OneHotRowsIgnoreScores) {
  std::mt19937_64 rng(47);
  const auto ym = rows({{0, 1, 0}, {1, 1, 0}, {0, 0, 1}, {1, 0, 1}});
  const Matrix h = plcl::oracle::random_matrix(4, 3, rng);
  const Matrix q = plcl::oracle::random_matrix(4, 3, rng);
  const auto graph = graph_from_dense((Matrix(4, 4) << 0, .5, 0, .5, 1, 0, .5, 0, 0, .5, 0, .5, 0, 0, .5, 0).finished());
  const Matrix p = plcl::update_p(h, &q, &graph, ym, 1.0, 2.0);
  EXPECT_EQ(Vector(p.row(0).transpose()), Vector(ym.matrix().row(0).transpose()));
  EXPECT_EQ(Vector(p.row(2).transpose()), Vector(ym.matrix().row(2).transpose()));
  EXPECT_NO_THROW(plcl::check_confidences(p, nullptr, ym));
}

TEST(UpdateP, MatchesDenseOracle) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix h = plcl::oracle::random_matrix(2, 2, rng);
    const Matrix q = plcl::oracle::random_matrix(2, 2, rng).cwiseAbs();
    const auto graph = graph_from_dense((Matrix(2, 2) << 0, 1, 1, 0).finished());
    const auto ym = rows({{1, 1}, {1, 1}});
    const double beta = u(rng);
    const double mu = u(rng);
    const Matrix p = plcl::update_p(h, &q, &graph, ym, beta, mu, std::nullopt, plcl::BlockQpOptions{1e-10, 100000});

    // ||H-P||^2 + beta ||E-Q-P||^2 + mu ||P - G^T P||^2 over vec(P), column-major.
    const Matrix ig = Matrix::Identity(2, 2) - Matrix(graph.G).transpose();
    Matrix hess = Matrix::Zero(4, 4);
    Vector lin(4);
    for (Index j = 0; j < 2; ++j) {
      hess.block(j * 2, j * 2, 2, 2) = 2.0 * (1.0 + beta) * Matrix::Identity(2, 2) + 2.0 * mu * ig.transpose() * ig;
      for (Index i = 0; i < 2; ++i) lin[j * 2 + i] = 2.0 * (h(i, j) + beta * (1.0 - q(i, j)));
    }
    const auto exact = plcl::oracle::enumerate_faces(hess, lin, Vector::Ones(4), {0, 1, 0, 1});
    ASSERT_TRUE(exact.found);
    Matrix p_exact(2, 2);
    p_exact << exact.x[0], exact.x[2], exact.x[1], exact.x[3];
    EXPECT_LE(plcl::testing::max_abs_diff(p, p_exact), 1e-4) << "trial " << trial;
    EXPECT_NEAR(plcl::p_subproblem_objective(p, h, &q, &graph, beta, mu),
                plcl::p_subproblem_objective(p_exact, h, &q, &graph, beta, mu), 1e-6);
  }
}

TEST(UpdateP, NeverWorseThanCurrent) {
  std::mt19937_64 rng(59);
  const auto data = random_instance(rng, 25, 4, 2);
  const auto support = plcl::knn_mask(data.X, 4);
  const auto graph = plcl::init_graph(data.X, support);
  const Matrix h = plcl::oracle::random_matrix(25, 4, rng);
  const Matrix q = plcl::oracle::random_matrix(25, 4, rng).cwiseAbs();
  const Matrix current = plcl::init_p(data.Y, &graph);
  const Matrix p = plcl::update_p(h, &q, &graph, data.Y, 1.0, 1.0, current);
  EXPECT_NO_THROW(plcl::check_confidences(p, nullptr, data.Y));
  EXPECT_LE(plcl::p_subproblem_objective(p, h, &q, &graph, 1.0, 1.0),
            plcl::p_subproblem_objective(current, h, &q, &graph, 1.0, 1.0) + 1e-10);
}

TEST(Objective, TermIsolation) {
  std::mt19937_64 rng(61);
  const auto data = random_instance(rng, 10, 3, 2);
  const auto support = plcl::knn_mask(data.X, 3);
  plcl::ModelState state;
  state.ordinary = plcl::zero_classifier(false, 10, 2, 3, 0.0);
  state.complementary = plcl::zero_classifier(false, 10, 2, 3, 0.0);
  state.P = plcl::uniform_over_candidates(data.Y);
  state.Q = Matrix::Zero(10, 3);
  state.graph = plcl::init_graph(data.X, support);
  plcl::HyperParams params;
  params.alpha = params.beta = params.gamma = params.mu = 0.0;
  EXPECT_DOUBLE_EQ(plcl::objective(state, data.X, nullptr, params), state.P.squaredNorm());
}

TEST(Objective, DoublingGammaDoublesFeatureTerm) {
  std::mt19937_64 rng(67);
  const auto data = random_instance(rng, 12, 3, 2);
  plcl::HyperParams params;
  params.k = 3;
  params.max_outer_iters = 2;
  const auto model = plcl::fit(data, params);
  const auto& kernel = *model.kernel;
  const auto terms = plcl::objective_terms(model.state, data.X, &kernel, params);
  plcl::HyperParams doubled = params;
  doubled.gamma *= 2.0;
  const auto terms2 = plcl::objective_terms(model.state, data.X, &kernel, doubled);
  EXPECT_NEAR(terms2.feature_graph, 2.0 * terms.feature_graph, 1e-12);
  EXPECT_NEAR(plcl::objective(model.state, data.X, &kernel, doubled) - plcl::objective(model.state, data.X, &kernel, params),
              terms.feature_graph, 1e-10);
  EXPECT_GT(terms.feature_graph, 0.0);
}

TEST(Objective, KernelPenaltyForm) {
  std::mt19937_64 rng(71);
  const auto data = random_instance(rng, 10, 3, 2);
  plcl::HyperParams params;
  params.use_complementary = false;
  params.use_graph = false;
  params.max_outer_iters = 1;
  const auto model = plcl::fit(data, params);
  const auto& sol = std::get<plcl::RegressorSolution>(model.state.ordinary);
  const auto terms = plcl::objective_terms(model.state, data.X, &*model.kernel, params);
  // lambda ||W||^2 = tr(A^T K A) / (4 lambda) with c = 1 / (2 lambda).
  EXPECT_NEAR(terms.penalty, (sol.A.transpose() * model.kernel->K * sol.A).trace() / (4.0 * params.lambda), 1e-9);
}

TEST(Fit, InvariantsAndBlockMonotonicity) {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 6; ++trial) {
    const auto data = random_instance(rng, 20 + 5 * trial, 2 + trial % 4, 1 + trial % 5);
    plcl::HyperParams params;
    params.k = 4;
    params.max_outer_iters = 8;
    plcl::FitDiagnostics diag;
    const auto model = plcl::fit(data, params, plcl::FitOptions{true, true}, &diag);
    ASSERT_GE(diag.block_trace.size(), 6U);
    EXPECT_EQ(diag.block_names.front(), "init");
    for (std::size_t s = 1; s < diag.block_trace.size(); ++s) {
      EXPECT_LE(diag.block_trace[s], diag.block_trace[s - 1] + 1e-8)
          << "trial " << trial << " block " << diag.block_names[s] << " step " << s;
    }
    EXPECT_NO_THROW(plcl::check_confidences(model.state.P, &model.state.Q, data.Y));
    EXPECT_NO_THROW(plcl::check_graph(*model.state.graph, *model.support));
    for (std::size_t s = 1; s < model.objective_trace.size(); ++s) {
      EXPECT_LE(model.objective_trace[s], model.objective_trace[s - 1] + 1e-8);
    }
  }
}

TEST(Fit, UnambiguousDataKeepsP) {
  const auto data = plcl::make_blobs(60, 3, 2, 10.0, 5);
  plcl::HyperParams params;
  params.max_outer_iters = 5;
  const auto model = plcl::fit(data, params);
  EXPECT_EQ(model.state.P, data.Y.matrix());
  EXPECT_EQ(plcl::transductive_labels(model), *data.true_labels);
  EXPECT_EQ(plcl::predict(model, data.X), *data.true_labels);
}

TEST(Fit, AdversarialCoupling) {
  const auto data = corrupted_blobs(40, 3, 2, 3.0, 7);
  const auto gap = [&](double beta) {
    plcl::HyperParams params;
    params.beta = beta;
    params.max_outer_iters = 1;
    const auto model = plcl::fit(data, params);
    return (1.0 - model.state.P.array() - model.state.Q.array()).matrix().norm();
  };
  EXPECT_LT(gap(1e4), gap(0.01));
}

TEST(Fit, AblationsReduceExactly) {
  const auto data = corrupted_blobs(45, 3, 2, 4.0, 9);
  plcl::HyperParams params;
  params.max_outer_iters = 4;

  plcl::HyperParams no_graph = params;
  no_graph.use_graph = false;
  plcl::FitDiagnostics diag;
  const auto ng = plcl::fit(data, no_graph, plcl::FitOptions{true, true}, &diag);
  EXPECT_FALSE(ng.state.graph.has_value());
  EXPECT_FALSE(ng.support.has_value());
  EXPECT_EQ(std::count(diag.block_names.begin(), diag.block_names.end(), "graph"), 0);
  const auto ng_terms = plcl::objective_terms(ng.state, data.X, &*ng.kernel, no_graph);
  EXPECT_EQ(ng_terms.label_graph, 0.0);
  EXPECT_EQ(ng_terms.feature_graph, 0.0);

  plcl::HyperParams linear = params;
  linear.use_kernel = false;
  const auto lin = plcl::fit(data, linear);
  EXPECT_TRUE(std::holds_alternative<plcl::LinearSolution>(lin.state.ordinary));
  EXPECT_FALSE(lin.kernel.has_value());
  EXPECT_NO_THROW(plcl::check_confidences(lin.state.P, &lin.state.Q, data.Y));

  plcl::HyperParams no_comp = params;
  no_comp.use_complementary = false;
  plcl::FitDiagnostics diag2;
  const auto nc = plcl::fit(data, no_comp, plcl::FitOptions{true, true}, &diag2);
  EXPECT_EQ(nc.state.Q, Matrix::Zero(45, 3));
  EXPECT_EQ(std::count(diag2.block_names.begin(), diag2.block_names.end(), "q"), 0);
  EXPECT_EQ(std::count(diag2.block_names.begin(), diag2.block_names.end(), "complementary"), 0);
  const auto nc_terms = plcl::objective_terms(nc.state, data.X, &*nc.kernel, no_comp);
  EXPECT_EQ(nc_terms.adversarial, 0.0);
  EXPECT_EQ(nc_terms.complementary, 0.0);
}

TEST(Fit, LinearModeMonotone) {
  std::mt19937_64 rng(79);
  const auto data = random_instance(rng, 30, 3, 4);
  plcl::HyperParams params;
  params.use_kernel = false;
  params.k = 5;
  params.max_outer_iters = 6;
  plcl::FitDiagnostics diag;
  (void)plcl::fit(data, params, plcl::FitOptions{true, true}, &diag);
  for (std::size_t s = 1; s < diag.block_trace.size(); ++s) {
    EXPECT_LE(diag.block_trace[s], diag.block_trace[s - 1] + 1e-8) << diag.block_names[s];
  }
}

TEST(Fit, ZeroAlphaDropsComplementaryClassifier) {
  const auto data = corrupted_blobs(30, 3, 2, 4.0, 11);
  plcl::HyperParams params;
  params.alpha = 0.0;
  params.max_outer_iters = 3;
  plcl::FitDiagnostics diag;
  const auto model = plcl::fit(data, params, plcl::FitOptions{true, true}, &diag);
  EXPECT_EQ(std::count(diag.block_names.begin(), diag.block_names.end(), "complementary"), 0);
  EXPECT_NO_THROW(plcl::check_confidences(model.state.P, &model.state.Q, data.Y));
  for (std::size_t s = 1; s < diag.block_trace.size(); ++s) EXPECT_LE(diag.block_trace[s], diag.block_trace[s - 1] + 1e-8);
  EXPECT_TRUE(std::get<plcl::RegressorSolution>(model.state.complementary).A.isZero());
}

TEST(Fit, Deterministic) {
  const auto data = corrupted_blobs(50, 3, 2, 3.0, 13);
  plcl::HyperParams params;
  params.max_outer_iters = 5;
  const auto a = plcl::fit(data, params);
  const auto b = plcl::fit(data, params);
  ASSERT_EQ(a.objective_trace.size(), b.objective_trace.size());
  for (std::size_t i = 0; i < a.objective_trace.size(); ++i) EXPECT_EQ(a.objective_trace[i], b.objective_trace[i]);
  EXPECT_EQ(a.state.P, b.state.P);
}

TEST(Fit, RejectsBadInput) {
  const auto data = corrupted_blobs(20, 3, 2, 3.0, 17);
  plcl::HyperParams params;
  params.lambda = 0.0;
  EXPECT_PLCL_ERROR(plcl::fit(data, params), ErrorKind::InvalidInput);
  params = plcl::HyperParams{};
  params.alpha = params.beta = 0.0;
  EXPECT_PLCL_ERROR(plcl::fit(data, params), ErrorKind::InvalidInput);
  plcl::PartialDataset bad = data;
  bad.X = Matrix::Zero(19, 2);
  EXPECT_PLCL_ERROR(plcl::fit(bad, plcl::HyperParams{}), ErrorKind::InvariantViolation);
}

TEST(Predict, ZeroDualsPredictArgmaxBias) {
  const auto data = corrupted_blobs(30, 3, 2, 4.0, 19);
  plcl::HyperParams params;
  params.max_outer_iters = 2;
  auto model = plcl::fit(data, params);
  auto& sol = std::get<plcl::RegressorSolution>(model.state.ordinary);
  sol.A.setZero();
  sol.b << 0.1, 0.5, 0.5;
  for (int label : plcl::predict(model, data.X)) EXPECT_EQ(label, 1);
}

TEST(Predict, ClassPermutationPermutesPredictions) {
  const auto data = corrupted_blobs(60, 4, 2, 3.0, 23);
  plcl::HyperParams params;
  params.max_outer_iters = 3;
  const auto model = plcl::fit(data, params);
  const std::vector<int> perm = {2, 0, 3, 1};  // new column c holds old column perm[c]
  auto permuted = model;
  auto& sol = std::get<plcl::RegressorSolution>(permuted.state.ordinary);
  const auto& orig = std::get<plcl::RegressorSolution>(model.state.ordinary);
  for (int c = 0; c < 4; ++c) {
    sol.A.col(c) = orig.A.col(perm[static_cast<std::size_t>(c)]);
    sol.b[c] = orig.b[perm[static_cast<std::size_t>(c)]];
  }
  const Matrix x_test = plcl::make_blobs(40, 4, 2, 3.0, 99).X;
  const auto before = plcl::predict(model, x_test);
  const auto after = plcl::predict(permuted, x_test);
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(perm[static_cast<std::size_t>(after[i])], before[i]);
  }
}

TEST(Predict, WrongDimension) {
  const auto data = corrupted_blobs(20, 3, 2, 3.0, 29);
  plcl::HyperParams params;
  params.max_outer_iters = 1;
  const auto model = plcl::fit(data, params);
  EXPECT_PLCL_ERROR(plcl::predict(model, Matrix::Zero(2, 3)), ErrorKind::DimensionMismatch);
}

TEST(Transductive, TieGoesToLowerCandidate) {
  plcl::FittedModel model;
  model.state.P = (Matrix(3, 3) << 0, 0.5, 0.5, 1, 0, 0, 0.2, 0.3, 0.5).finished();
  EXPECT_EQ(plcl::transductive_labels(model), (plcl::LabelVector{1, 0, 2}));
}

TEST(Transductive, LabelsAreCandidatesAndBeatTestOnAverage) {
  double transductive = 0.0;
  double test = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = corrupted_blobs(120, 3, 2, 3.0, 300 + seed);
    const auto parts = plcl::split(data, 0.5, seed);
    plcl::HyperParams params;
    const auto model = plcl::fit(parts.train, params);
    const auto labels = plcl::transductive_labels(model);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      EXPECT_TRUE(parts.train.Y.is_candidate(static_cast<Index>(i), labels[i]));
    }
    transductive += plcl::accuracy(labels, *parts.train.true_labels);
    test += plcl::accuracy(plcl::predict(model, parts.test.X), *parts.test.true_labels);
  }
  EXPECT_GE(transductive, test);
}
