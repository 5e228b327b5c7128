#ifndef PLCL_SERIALIZE_HPP
#define PLCL_SERIALIZE_HPP

// Versioned JSON container for fitted models. Doubles are written in their
// shortest round-trip form, so a reloaded model predicts bit-identically.

#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include "json.hpp"
#include "plcl/data.hpp"
#include "plcl/model.hpp"

namespace plcl {

inline constexpr const char* kModelFormat = "plcl-model";
inline constexpr int kModelVersion = 1;

namespace detail {

using nlohmann::json;

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

inline Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const json& data = j.at("data");
  require(static_cast<Index>(data.size()) == rows, ErrorKind::ParseError, "matrix row count mismatch");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = data.at(static_cast<std::size_t>(i));
    require(static_cast<Index>(row.size()) == cols, ErrorKind::ParseError, "matrix column count mismatch");
    for (Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Vector vector_from_json(const json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j[i].get<double>();
  return v;
}

inline json classifier_to_json(const ClassifierSolution& sol) {
  if (const auto* dual = std::get_if<RegressorSolution>(&sol)) {
    return json{{"kind", "kernel"}, {"A", matrix_to_json(dual->A)}, {"b", vector_to_json(dual->b)}, {"c", dual->c}};
  }
  const auto& lin = std::get<LinearSolution>(sol);
  return json{{"kind", "linear"}, {"W", matrix_to_json(lin.W)}, {"b", vector_to_json(lin.b)}};
}

inline ClassifierSolution classifier_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "kernel") {
    return RegressorSolution{matrix_from_json(j.at("A")), vector_from_json(j.at("b")), j.at("c").get<double>()};
  }
  if (kind == "linear") return LinearSolution{matrix_from_json(j.at("W")), vector_from_json(j.at("b"))};
  throw Error(ErrorKind::ParseError, "unknown classifier kind '" + kind + "'");
}

}  // namespace detail

inline nlohmann::json params_to_json(const HyperParams& p) {
  return nlohmann::json{{"alpha", p.alpha},
                        {"beta", p.beta},
                        {"gamma", p.gamma},
                        {"mu", p.mu},
                        {"lambda", p.lambda},
                        {"k", p.k},
                        {"tol", p.tol},
                        {"max_outer_iters", p.max_outer_iters},
                        {"use_kernel", p.use_kernel},
                        {"use_complementary", p.use_complementary},
                        {"use_graph", p.use_graph}};
}

/// Overwrites the fields present in `j`; unknown keys are rejected.
inline void params_from_json(const nlohmann::json& j, HyperParams& p) {
  for (const auto& [key, value] : j.items()) {
    if (key == "alpha") p.alpha = value.get<double>();
    else if (key == "beta") p.beta = value.get<double>();
    else if (key == "gamma") p.gamma = value.get<double>();
    else if (key == "mu") p.mu = value.get<double>();
    else if (key == "lambda") p.lambda = value.get<double>();
    else if (key == "k") p.k = value.get<int>();
    else if (key == "tol") p.tol = value.get<double>();
    else if (key == "max_outer_iters") p.max_outer_iters = value.get<int>();
    else if (key == "use_kernel") p.use_kernel = value.get<bool>();
    else if (key == "use_complementary") p.use_complementary = value.get<bool>();
    else if (key == "use_graph") p.use_graph = value.get<bool>();
    else throw Error(ErrorKind::InvalidInput, "unknown hyper-parameter '" + key + "'");
  }
}

inline nlohmann::json model_to_json(const FittedModel& model) {
  using detail::json;
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["params"] = params_to_json(model.params);
  j["sigma"] = model.kernel ? model.kernel->sigma : 0.0;
  j["train_features"] = detail::matrix_to_json(model.train_features);
  j["ordinary"] = detail::classifier_to_json(model.state.ordinary);
  j["complementary"] = detail::classifier_to_json(model.state.complementary);
  j["P"] = detail::matrix_to_json(model.state.P);
  j["Q"] = detail::matrix_to_json(model.state.Q);
  if (model.state.graph && model.support) {
    json triplets = json::array();
    const SparseMatrix& g = model.state.graph->G;
    for (Index col = 0; col < g.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(g, col); it; ++it) triplets.push_back({it.row(), it.col(), it.value()});
    }
    j["graph"] = {{"n", g.rows()}, {"entries", std::move(triplets)}, {"neighbors", model.support->neighbors}};
  }
  j["objective_trace"] = model.objective_trace;
  j["iterations"] = model.iterations;
  j["converged"] = model.converged;
  return j;
}

inline FittedModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", std::string()) != kModelFormat) {
    throw Error(ErrorKind::VersionMismatch, "not a plcl model file");
  }
  const int version = j.value("version", -1);
  if (version != kModelVersion) {
    throw Error(ErrorKind::VersionMismatch, "model version " + std::to_string(version) + " is not supported (expected " +
                                                std::to_string(kModelVersion) + ")");
  }
  try {
    FittedModel model;
    params_from_json(j.at("params"), model.params);
    model.train_features = detail::matrix_from_json(j.at("train_features"));
    model.state.ordinary = detail::classifier_from_json(j.at("ordinary"));
    model.state.complementary = detail::classifier_from_json(j.at("complementary"));
    model.state.P = detail::matrix_from_json(j.at("P"));
    model.state.Q = detail::matrix_from_json(j.at("Q"));
    if (model.params.use_kernel) {
      KernelCache cache;
      cache.sigma = j.at("sigma").get<double>();
      cache.train_features = model.train_features;
      cache.K = detail::gaussian_cross_kernel(model.train_features, model.train_features, cache.sigma);
      model.kernel = std::move(cache);
    }
    if (j.contains("graph")) {
      const auto& gj = j.at("graph");
      const auto n = gj.at("n").get<Index>();
      std::vector<Eigen::Triplet<double>> triplets;
      for (const auto& e : gj.at("entries")) triplets.emplace_back(e.at(0).get<Index>(), e.at(1).get<Index>(), e.at(2).get<double>());
      SimilarityGraph graph;
      graph.G.resize(n, n);
      graph.G.setFromTriplets(triplets.begin(), triplets.end());
      graph.G.makeCompressed();
      model.state.graph = std::move(graph);
      GraphSupport support;
      support.k = model.params.k;
      support.neighbors = gj.at("neighbors").get<std::vector<std::vector<Index>>>();
      model.support = std::move(support);
    }
    model.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    model.iterations = j.at("iterations").get<int>();
    model.converged = j.at("converged").get<bool>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed model file: ") + e.what());
  }
}

inline void save_model(const FittedModel& model, const std::string& path) {
  auto out = detail::open_output(path);
  out << model_to_json(model).dump() << '\n';
}

inline FittedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace plcl

#endif  // PLCL_SERIALIZE_HPP
