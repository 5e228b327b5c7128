#ifndef PLCL_EXPERIMENT_HPP
#define PLCL_EXPERIMENT_HPP

// Reproducible experiment drivers behind the command-line tool: dataset
// materialization, repeated train/test benchmarks with paired significance
// verdicts, hyper-parameter sweeps, and fit/predict persistence.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "plcl/data.hpp"
#include "plcl/eval.hpp"
#include "plcl/model.hpp"
#include "plcl/serialize.hpp"

namespace plcl {

struct BlobSettings {
  Index n = 300;
  int labels = 3;
  Index features = 2;
  double separation = 4.0;
  std::uint64_t seed = 0;
};

struct DataSource {
  std::string features;
  std::string candidates;
  std::string truth;
  std::optional<BlobSettings> blobs;
};

struct ExperimentConfig {
  DataSource data;
  std::optional<CorruptionSpec> corruption;
  HyperParams params;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  double ratio = 0.5;
  std::vector<std::string> methods{"plcl", "pl-knn"};
  std::vector<double> mae_k;
  int knn_k = 10;
  double significance = 0.05;
  /// Parameter name -> values; the sweep runs the Cartesian product.
  std::map<std::string, std::vector<double>> sweep;
  std::string sweep_method = "plcl";
  std::string out = "results";
  std::string model_path;
  std::string predictions_path;
  int threads = 1;
};

// ---------------------------------------------------------------------------
// Config file

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("data")) {
      const auto& d = j.at("data");
      cfg.data.features = d.value("features", std::string());
      cfg.data.candidates = d.value("candidates", std::string());
      cfg.data.truth = d.value("truth", std::string());
      if (d.contains("blobs")) {
        const auto& b = d.at("blobs");
        BlobSettings blobs;
        blobs.n = b.value("n", blobs.n);
        blobs.labels = b.value("l", blobs.labels);
        blobs.features = b.value("q", blobs.features);
        blobs.separation = b.value("separation", blobs.separation);
        blobs.seed = b.value("seed", blobs.seed);
        cfg.data.blobs = blobs;
      }
    }
    if (j.contains("corruption")) {
      const auto& c = j.at("corruption");
      CorruptionSpec spec;
      spec.mode = parse_corruption_mode(c.value("mode", std::string("random-r")));
      spec.p = c.value("p", spec.p);
      spec.r = c.value("r", spec.r);
      spec.epsilon = c.value("epsilon", spec.epsilon);
      spec.seed = c.value("seed", spec.seed);
      cfg.corruption = spec;
    }
    if (j.contains("params")) params_from_json(j.at("params"), cfg.params);
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("splits")) {
      const int splits = j.at("splits").get<int>();
      detail::require(splits >= 1, ErrorKind::InvalidInput, "splits must be >= 1");
      cfg.seeds.clear();
      for (int s = 0; s < splits; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    cfg.ratio = j.value("ratio", cfg.ratio);
    if (j.contains("methods")) cfg.methods = j.at("methods").get<std::vector<std::string>>();
    if (j.contains("mae_k")) cfg.mae_k = j.at("mae_k").get<std::vector<double>>();
    cfg.knn_k = j.value("knn_k", cfg.knn_k);
    cfg.significance = j.value("significance", cfg.significance);
    if (j.contains("sweep")) cfg.sweep = j.at("sweep").get<std::map<std::string, std::vector<double>>>();
    cfg.sweep_method = j.value("sweep_method", cfg.sweep_method);
    cfg.out = j.value("out", cfg.out);
    cfg.model_path = j.value("model", cfg.model_path);
    cfg.predictions_path = j.value("predictions", cfg.predictions_path);
    cfg.threads = j.value("threads", cfg.threads);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("config: ") + e.what());
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
  return config_from_json(j);
}

inline void set_param(HyperParams& params, const std::string& name, double value) {
  if (name == "alpha") params.alpha = value;
  else if (name == "beta") params.beta = value;
  else if (name == "gamma") params.gamma = value;
  else if (name == "mu") params.mu = value;
  else if (name == "lambda") params.lambda = value;
  else throw Error(ErrorKind::InvalidInput, "cannot sweep parameter '" + name + "'");
}

// ---------------------------------------------------------------------------
// Data preparation

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E5F5ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// The configured dataset before corruption.
inline PartialDataset load_source(const DataSource& source) {
  if (source.blobs) {
    const auto& b = *source.blobs;
    return make_blobs(b.n, b.labels, b.features, b.separation, b.seed);
  }
  detail::require(!source.features.empty() && !source.candidates.empty(), ErrorKind::InvalidInput,
                  "config names neither blob settings nor feature/candidate files");
  return load_dataset(source.features, source.candidates,
                      source.truth.empty() ? std::nullopt : std::optional<std::string>(source.truth));
}

/// Replaces the candidate sets with a fresh corruption of the ground truth.
inline PartialDataset apply_corruption(PartialDataset data, const CorruptionSpec& spec) {
  detail::require(data.true_labels.has_value(), ErrorKind::InvalidSpec, "corruption needs ground-truth labels");
  data.Y = synthesize_candidates(*data.true_labels, static_cast<int>(data.num_labels()), spec);
  return data;
}

/// Dataset used for one benchmark split. With a corruption spec, candidates
/// are redrawn per split from a seed derived from (corruption seed, split).
inline PartialDataset prepare_dataset(const ExperimentConfig& cfg, const PartialDataset& source, std::uint64_t split_seed) {
  if (!cfg.corruption) return source;
  CorruptionSpec spec = *cfg.corruption;
  spec.seed = mix_seed(spec.seed, split_seed);
  return apply_corruption(source, spec);
}

// ---------------------------------------------------------------------------
// Methods

struct MethodSpec {
  std::string name;
  bool knn = false;
  bool use_kernel = true;
  bool use_complementary = true;
  bool use_graph = true;
};

/// The five kernel/complementary/graph combinations of the ablation study,
/// full model first.
inline std::vector<std::string> ablation_methods() {
  return {"plcl", "plcl-linear", "plcl-kernel", "plcl-no-comp", "plcl-no-graph"};
}

inline MethodSpec resolve_method(const std::string& name) {
  MethodSpec m;
  m.name = name;
  if (name == "plcl") return m;
  if (name == "pl-knn") {
    m.knn = true;
    return m;
  }
  if (name == "plcl-linear") {
    m.use_kernel = m.use_complementary = m.use_graph = false;
    return m;
  }
  if (name == "plcl-kernel") {
    m.use_complementary = m.use_graph = false;
    return m;
  }
  if (name == "plcl-no-comp") {
    m.use_complementary = false;
    return m;
  }
  if (name == "plcl-no-graph") {
    m.use_graph = false;
    return m;
  }
  throw Error(ErrorKind::InvalidInput, "unknown method '" + name + "'");
}

/// Expands the "plcl-ablations" shorthand into the four reduced variants.
inline std::vector<std::string> expand_methods(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& n : names) {
    if (n == "plcl-ablations") {
      const auto all = ablation_methods();
      out.insert(out.end(), all.begin() + 1, all.end());
    } else {
      out.push_back(n);
    }
  }
  return out;
}

/// PL-KNN applied to the training samples themselves: neighbors exclude the
/// sample, and the vote is restricted to its candidate set.
inline LabelVector pl_knn_transductive(const PartialDataset& train, int k) {
  const Index n = train.size();
  const auto keep = static_cast<std::size_t>(std::min<Index>(k, n - 1));
  const Matrix& y = train.Y.matrix();
  LabelVector out(static_cast<std::size_t>(n));
  std::vector<std::pair<double, Index>> dist;
  for (Index i = 0; i < n; ++i) {
    dist.clear();
    for (Index j = 0; j < n; ++j) {
      if (j != i) dist.emplace_back((train.X.row(i) - train.X.row(j)).squaredNorm(), j);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(keep), dist.end());
    Vector votes = Vector::Zero(y.cols());
    for (std::size_t s = 0; s < keep; ++s) votes += y.row(dist[s].second).transpose();
    int best = -1;
    for (Index c = 0; c < y.cols(); ++c) {
      if (y(i, c) == 1.0 && (best < 0 || votes[c] > votes[best])) best = static_cast<int>(c);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

struct RunRecord {
  RunResult result;
  int iterations = 0;
  bool converged = false;
  bool ok = true;
  std::string status = "ok";
};

inline RunRecord run_method(const MethodSpec& method, const DatasetSplit& split, const ExperimentConfig& cfg,
                            const HyperParams& params, std::uint64_t seed) {
  RunRecord rec;
  rec.result.method = method.name;
  rec.result.seed = seed;
  try {
    detail::require(split.train.true_labels && split.test.true_labels, ErrorKind::InvalidInput,
                    "benchmarks need ground-truth labels");
    LabelVector test_pred;
    LabelVector train_pred;
    if (method.knn) {
      test_pred = pl_knn_fit_predict(split.train, split.test.X, cfg.knn_k);
      train_pred = pl_knn_transductive(split.train, cfg.knn_k);
    } else {
      HyperParams p = params;
      p.use_kernel = method.use_kernel;
      p.use_complementary = method.use_complementary;
      p.use_graph = method.use_graph;
      const FittedModel model = fit(split.train, p);
      test_pred = predict(model, split.test.X);
      train_pred = transductive_labels(model);
      rec.iterations = model.iterations;
      rec.converged = model.converged;
    }
    rec.result.test_accuracy = accuracy(test_pred, *split.test.true_labels);
    rec.result.transductive_accuracy = accuracy(train_pred, *split.train.true_labels);
    for (double tol : cfg.mae_k) rec.result.mae_k[tol] = mae_k_accuracy(test_pred, *split.test.true_labels, tol);
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.status = std::string("failed: ") + e.what();
    rec.result.test_accuracy = std::numeric_limits<double>::quiet_NaN();
    rec.result.transductive_accuracy = std::numeric_limits<double>::quiet_NaN();
  }
  return rec;
}

namespace detail {

/// Runs tasks [0, count) on up to `threads` workers; results land in
/// task-indexed slots so the output order never depends on scheduling.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  return format_double(v);
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Bench

struct AggregateRow {
  std::string method;
  MeanStd test;
  MeanStd transductive;
  std::map<double, MeanStd> mae_k;
  int successful_runs = 0;
};

struct VerdictRow {
  std::string reference;
  std::string method;
  Verdict verdict = Verdict::Tie;
  double t = 0.0;
  bool defined = true;
};

struct BenchReport {
  std::vector<std::string> methods;
  std::vector<RunRecord> runs;  // method-major, seeds in config order
  std::vector<AggregateRow> aggregates;
  std::vector<VerdictRow> verdicts;
  std::vector<std::string> warnings;
  std::vector<double> mae_k;

  [[nodiscard]] bool any_failed() const {
    return std::any_of(runs.begin(), runs.end(), [](const RunRecord& r) { return !r.ok; });
  }

  [[nodiscard]] std::vector<double> test_accuracies(const std::string& method) const {
    std::vector<double> out;
    for (const auto& r : runs) {
      if (r.result.method == method) out.push_back(r.result.test_accuracy);
    }
    return out;
  }
};

inline BenchReport run_bench(const ExperimentConfig& cfg, const std::vector<std::string>& method_names) {
  detail::require(!cfg.seeds.empty(), ErrorKind::InvalidInput, "bench needs at least one seed");
  detail::require(!method_names.empty(), ErrorKind::InvalidInput, "bench needs at least one method");
  BenchReport report;
  report.methods = method_names;
  report.mae_k = cfg.mae_k;
  std::vector<MethodSpec> methods;
  for (const auto& name : method_names) methods.push_back(resolve_method(name));

  const PartialDataset source = load_source(cfg.data);
  std::vector<DatasetSplit> splits;
  for (std::uint64_t seed : cfg.seeds) splits.push_back(split(prepare_dataset(cfg, source, seed), cfg.ratio, seed));

  const std::size_t n_seeds = cfg.seeds.size();
  report.runs.resize(methods.size() * n_seeds);
  detail::parallel_for(report.runs.size(), cfg.threads, [&](std::size_t task) {
    const std::size_t m = task / n_seeds;
    const std::size_t s = task % n_seeds;
    report.runs[task] = run_method(methods[m], splits[s], cfg, cfg.params, cfg.seeds[s]);
  });

  for (std::size_t m = 0; m < methods.size(); ++m) {
    AggregateRow agg;
    agg.method = methods[m].name;
    std::vector<double> test;
    std::vector<double> trans;
    std::map<double, std::vector<double>> mae;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const auto& run = report.runs[m * n_seeds + s];
      if (!run.ok) continue;
      test.push_back(run.result.test_accuracy);
      trans.push_back(run.result.transductive_accuracy);
      for (const auto& [tol, acc] : run.result.mae_k) mae[tol].push_back(acc);
    }
    agg.successful_runs = static_cast<int>(test.size());
    if (!test.empty()) {
      agg.test = mean_std(test);
      agg.transductive = mean_std(trans);
      for (const auto& [tol, values] : mae) agg.mae_k[tol] = mean_std(values);
    } else {
      agg.test = agg.transductive = MeanStd{std::numeric_limits<double>::quiet_NaN(), 0.0};
    }
    report.aggregates.push_back(std::move(agg));
  }

  for (std::size_t m = 1; m < methods.size(); ++m) {
    std::vector<double> a;
    std::vector<double> b;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const auto& ref = report.runs[s];
      const auto& other = report.runs[m * n_seeds + s];
      if (ref.ok && other.ok) {
        a.push_back(ref.result.test_accuracy);
        b.push_back(other.result.test_accuracy);
      }
    }
    VerdictRow row;
    row.reference = methods[0].name;
    row.method = methods[m].name;
    if (a.size() < 2) {
      row.defined = false;
      report.warnings.push_back("verdict " + row.reference + " vs " + row.method + " undefined with " +
                                std::to_string(a.size()) + " paired run(s); reported as tie");
    } else {
      const auto t = paired_t_test_detailed(a, b, cfg.significance);
      row.verdict = t.verdict;
      row.t = t.t;
    }
    report.verdicts.push_back(row);
  }
  return report;
}

inline void write_bench_csv(const BenchReport& report, std::ostream& out) {
  out << "kind,method,reference,seed,test_accuracy,test_std,transductive_accuracy,transductive_std,iterations,"
         "converged,verdict,t_stat,status";
  for (double tol : report.mae_k) out << ",mae" << detail::format_double(tol) << ",mae" << detail::format_double(tol) << "_std";
  out << '\n';
  for (const auto& run : report.runs) {
    out << "run," << run.result.method << ",," << run.result.seed << ',' << detail::csv_number(run.result.test_accuracy)
        << ",," << detail::csv_number(run.result.transductive_accuracy) << ",," << run.iterations << ','
        << (run.converged ? 1 : 0) << ",,," << detail::csv_escape(run.status);
    for (double tol : report.mae_k) {
      const auto it = run.result.mae_k.find(tol);
      out << ',' << (it == run.result.mae_k.end() ? std::string("nan") : detail::csv_number(it->second)) << ',';
    }
    out << '\n';
  }
  for (const auto& agg : report.aggregates) {
    out << "aggregate," << agg.method << ",,," << detail::csv_number(agg.test.mean) << ','
        << detail::csv_number(agg.test.std) << ',' << detail::csv_number(agg.transductive.mean) << ','
        << detail::csv_number(agg.transductive.std) << ",,,,," << (agg.successful_runs > 0 ? "ok" : "failed");
    for (double tol : report.mae_k) {
      const auto it = agg.mae_k.find(tol);
      if (it == agg.mae_k.end()) {
        out << ",nan,nan";
      } else {
        out << ',' << detail::csv_number(it->second.mean) << ',' << detail::csv_number(it->second.std);
      }
    }
    out << '\n';
  }
  for (const auto& v : report.verdicts) {
    out << "verdict," << v.method << ',' << v.reference << ",,,,,,,," << to_string(v.verdict) << ','
        << (v.defined ? detail::csv_number(v.t) : std::string()) << ',' << (v.defined ? "ok" : "undefined");
    for (std::size_t i = 0; i < report.mae_k.size(); ++i) out << ",,";
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepRow {
  std::map<std::string, double> point;
  HyperParams params;
  RunRecord run;
};

struct SweepReport {
  std::vector<std::string> names;
  std::vector<SweepRow> rows;  // grid-point-major, seeds in config order

  [[nodiscard]] bool any_failed() const {
    return std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.run.ok; });
  }
};

inline SweepReport run_sweep(const ExperimentConfig& cfg) {
  detail::require(!cfg.sweep.empty(), ErrorKind::InvalidInput, "sweep grid is empty");
  detail::require(!cfg.seeds.empty(), ErrorKind::InvalidInput, "sweep needs at least one seed");
  SweepReport report;
  std::vector<std::vector<double>> axes;
  for (const auto& [name, values] : cfg.sweep) {
    detail::require(!values.empty(), ErrorKind::InvalidInput, "sweep axis '" + name + "' has no values");
    HyperParams probe;
    set_param(probe, name, 0.0);
    report.names.push_back(name);
    axes.push_back(values);
  }

  std::vector<std::map<std::string, double>> points{{}};
  for (std::size_t a = 0; a < axes.size(); ++a) {
    std::vector<std::map<std::string, double>> next;
    for (const auto& base : points) {
      for (double v : axes[a]) {
        auto p = base;
        p[report.names[a]] = v;
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }

  const MethodSpec method = resolve_method(cfg.sweep_method);
  const PartialDataset source = load_source(cfg.data);
  std::vector<DatasetSplit> splits;
  for (std::uint64_t seed : cfg.seeds) splits.push_back(split(prepare_dataset(cfg, source, seed), cfg.ratio, seed));

  const std::size_t n_seeds = cfg.seeds.size();
  report.rows.resize(points.size() * n_seeds);
  for (std::size_t g = 0; g < points.size(); ++g) {
    HyperParams params = cfg.params;
    for (const auto& [name, value] : points[g]) set_param(params, name, value);
    for (std::size_t s = 0; s < n_seeds; ++s) {
      report.rows[g * n_seeds + s].point = points[g];
      report.rows[g * n_seeds + s].params = params;
    }
  }
  detail::parallel_for(report.rows.size(), cfg.threads, [&](std::size_t task) {
    auto& row = report.rows[task];
    const std::size_t s = task % n_seeds;
    row.run = run_method(method, splits[s], cfg, row.params, cfg.seeds[s]);
  });
  return report;
}

inline void write_sweep_csv(const SweepReport& report, std::ostream& out) {
  out << "kind,method";
  for (const auto& name : {"alpha", "beta", "gamma", "mu", "lambda"}) out << ',' << name;
  out << ",seed,test_accuracy,test_std,transductive_accuracy,transductive_std,iterations,converged,status\n";
  const auto params_cols = [&](const HyperParams& p) {
    std::ostringstream s;
    s << ',' << detail::format_double(p.alpha) << ',' << detail::format_double(p.beta) << ','
      << detail::format_double(p.gamma) << ',' << detail::format_double(p.mu) << ','
      << detail::format_double(p.lambda);
    return s.str();
  };
  for (const auto& row : report.rows) {
    out << "sweep," << row.run.result.method << params_cols(row.params) << ',' << row.run.result.seed << ','
        << detail::csv_number(row.run.result.test_accuracy) << ",," << detail::csv_number(row.run.result.transductive_accuracy)
        << ",," << row.run.iterations << ',' << (row.run.converged ? 1 : 0) << ',' << detail::csv_escape(row.run.status)
        << '\n';
  }
  // one aggregate row per grid point, in grid order
  std::size_t start = 0;
  while (start < report.rows.size()) {
    std::size_t end = start;
    std::vector<double> test;
    std::vector<double> trans;
    while (end < report.rows.size() && report.rows[end].point == report.rows[start].point) {
      if (report.rows[end].run.ok) {
        test.push_back(report.rows[end].run.result.test_accuracy);
        trans.push_back(report.rows[end].run.result.transductive_accuracy);
      }
      ++end;
    }
    const auto& first = report.rows[start];
    out << "aggregate," << first.run.result.method << params_cols(first.params) << ",,";
    if (test.empty()) {
      out << "nan,,nan,,,,failed\n";
    } else {
      const auto t = mean_std(test);
      const auto r = mean_std(trans);
      out << detail::csv_number(t.mean) << ',' << detail::csv_number(t.std) << ',' << detail::csv_number(r.mean) << ','
          << detail::csv_number(r.std) << ",,,ok\n";
    }
    start = end;
  }
}

// ---------------------------------------------------------------------------
// Synth / fit / predict

struct SynthOutput {
  std::string features;
  std::string candidates;
  std::string truth;
  std::string manifest;
};

inline SynthOutput synth_paths(const std::string& dir) {
  const std::filesystem::path d(dir);
  return {(d / "features.csv").string(), (d / "candidates.csv").string(), (d / "truth.csv").string(),
          (d / "manifest.json").string()};
}

/// Materializes the corrupted dataset plus a manifest describing how it was
/// produced. Identical configs give byte-identical files.
inline SynthOutput cmd_synth(const ExperimentConfig& cfg) {
  detail::require(cfg.corruption.has_value(), ErrorKind::InvalidSpec, "synth needs a corruption spec");
  const PartialDataset source = load_source(cfg.data);
  detail::require(source.true_labels.has_value(), ErrorKind::InvalidSpec, "synth needs ground-truth labels");
  const auto l = static_cast<int>(source.num_labels());
  cfg.corruption->validate(l);
  const PartialDataset data = apply_corruption(source, *cfg.corruption);

  const SynthOutput paths = synth_paths(cfg.out);
  save_dataset(data, paths.features, paths.candidates, paths.truth);

  nlohmann::ordered_json manifest;
  manifest["seed"] = cfg.corruption->seed;
  manifest["mode"] = std::string(to_string(cfg.corruption->mode));
  manifest["p"] = cfg.corruption->p;
  manifest["r"] = cfg.corruption->r;
  manifest["epsilon"] = cfg.corruption->epsilon;
  manifest["n"] = data.size();
  manifest["l"] = l;
  manifest["q"] = data.X.cols();
  if (cfg.data.blobs) {
    const auto& b = *cfg.data.blobs;
    manifest["source"] = {{"kind", "blobs"}, {"n", b.n}, {"l", b.labels}, {"q", b.features},
                          {"separation", b.separation}, {"seed", b.seed}};
  } else {
    manifest["source"] = {{"kind", "files"}, {"features", cfg.data.features}, {"candidates", cfg.data.candidates},
                          {"truth", cfg.data.truth}};
  }
  auto out = detail::open_output(paths.manifest);
  out << manifest.dump(2) << '\n';
  return paths;
}

inline std::string default_model_path(const ExperimentConfig& cfg) {
  return cfg.model_path.empty() ? (std::filesystem::path(cfg.out) / "model.json").string() : cfg.model_path;
}

/// Fits on the whole configured dataset and writes the model file.
inline FittedModel cmd_fit(const ExperimentConfig& cfg) {
  PartialDataset data = load_source(cfg.data);
  if (cfg.corruption) data = apply_corruption(std::move(data), *cfg.corruption);
  FittedModel model = fit(data, cfg.params);
  save_model(model, default_model_path(cfg));
  return model;
}

inline LabelVector cmd_predict(const ExperimentConfig& cfg) {
  const FittedModel model = load_model(default_model_path(cfg));
  detail::require(!cfg.data.features.empty(), ErrorKind::InvalidInput, "predict needs a feature file");
  const Matrix x = read_matrix(cfg.data.features);
  LabelVector labels = predict(model, x);
  if (!cfg.predictions_path.empty()) write_labels(cfg.predictions_path, labels);
  return labels;
}

}  // namespace plcl

#endif  // PLCL_EXPERIMENT_HPP
