// plcl: command-line front end for fitting, predicting and benchmarking.
//
//   plcl synth   --config cfg.json --out data/
//   plcl fit     --config cfg.json --model model.json
//   plcl predict --model model.json --features x.csv --predictions y.csv
//   plcl bench   --config cfg.json --out results/
//   plcl sweep   --config cfg.json --grid alpha=0.1,1,2
//   plcl ablate  --config cfg.json
//
// Every flag overrides the matching config key. Exit status is 0 only when
// every requested run succeeded.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "plcl/experiment.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;

  std::optional<double> alpha, beta, gamma, mu, lambda, tol;
  std::optional<int> k, max_iters;
  std::optional<bool> use_kernel, use_complementary, use_graph;

  std::optional<std::string> features, candidates, truth;
  std::optional<long> blobs_n;
  std::optional<int> blobs_l;
  std::optional<long> blobs_q;
  std::optional<double> separation;
  std::optional<std::uint64_t> blobs_seed;

  std::optional<std::string> mode;
  std::optional<double> p, epsilon;
  std::optional<int> r;

  std::optional<int> splits;
  std::vector<std::string> methods;
  std::vector<double> mae_k;
  std::optional<int> knn_k;
  std::vector<std::string> grid;
  std::optional<std::string> model;
  std::optional<std::string> predictions;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--seed", o.seed, "base seed (split seeds for bench/sweep, corruption seed otherwise)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads for independent runs");

  cmd->add_option("--alpha", o.alpha);
  cmd->add_option("--beta", o.beta);
  cmd->add_option("--gamma", o.gamma);
  cmd->add_option("--mu", o.mu);
  cmd->add_option("--lambda", o.lambda);
  cmd->add_option("--k", o.k, "graph neighbors");
  cmd->add_option("--tol", o.tol, "outer-loop tolerance on the relative change of P");
  cmd->add_option("--max-iters", o.max_iters, "maximum outer iterations");
  cmd->add_option("--use-kernel", o.use_kernel);
  cmd->add_option("--use-complementary", o.use_complementary);
  cmd->add_option("--use-graph", o.use_graph);

  cmd->add_option("--features", o.features, "feature matrix file");
  cmd->add_option("--candidates", o.candidates, "candidate matrix file");
  cmd->add_option("--truth", o.truth, "ground-truth label file");
  cmd->add_option("--blobs-n", o.blobs_n, "generate Gaussian blobs with this many samples");
  cmd->add_option("--blobs-l", o.blobs_l);
  cmd->add_option("--blobs-q", o.blobs_q);
  cmd->add_option("--separation", o.separation);
  cmd->add_option("--blobs-seed", o.blobs_seed);

  cmd->add_option("--mode", o.mode, "corruption mode: random-r | coupled-epsilon");
  cmd->add_option("--p", o.p, "fraction of corrupted samples");
  cmd->add_option("--r", o.r, "false positives per corrupted sample");
  cmd->add_option("--epsilon", o.epsilon, "co-occurrence probability of the coupling label");

  cmd->add_option("--splits", o.splits, "number of random splits");
  cmd->add_option("--methods", o.methods, "methods to run")->delimiter(',');
  cmd->add_option("--mae-k", o.mae_k, "MAE-k tolerances")->delimiter(',');
  cmd->add_option("--knn-k", o.knn_k, "neighbors for PL-KNN");
  cmd->add_option("--grid", o.grid, "sweep axis, e.g. alpha=0.1,1,2 (repeatable)");
  cmd->add_option("--model", o.model, "model file");
  cmd->add_option("--predictions", o.predictions, "label output file (predict)");
}

plcl::ExperimentConfig build_config(const Overrides& o, const std::string& command) {
  using namespace plcl;
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);

  if (o.out) cfg.out = *o.out;
  if (o.threads) cfg.threads = *o.threads;

  auto& p = cfg.params;
  if (o.alpha) p.alpha = *o.alpha;
  if (o.beta) p.beta = *o.beta;
  if (o.gamma) p.gamma = *o.gamma;
  if (o.mu) p.mu = *o.mu;
  if (o.lambda) p.lambda = *o.lambda;
  if (o.tol) p.tol = *o.tol;
  if (o.k) p.k = *o.k;
  if (o.max_iters) p.max_outer_iters = *o.max_iters;
  if (o.use_kernel) p.use_kernel = *o.use_kernel;
  if (o.use_complementary) p.use_complementary = *o.use_complementary;
  if (o.use_graph) p.use_graph = *o.use_graph;

  if (o.features) cfg.data.features = *o.features;
  if (o.candidates) cfg.data.candidates = *o.candidates;
  if (o.truth) cfg.data.truth = *o.truth;
  if (o.blobs_n || o.blobs_l || o.blobs_q || o.separation || o.blobs_seed) {
    BlobSettings b = cfg.data.blobs.value_or(BlobSettings{});
    if (o.blobs_n) b.n = *o.blobs_n;
    if (o.blobs_l) b.labels = *o.blobs_l;
    if (o.blobs_q) b.features = *o.blobs_q;
    if (o.separation) b.separation = *o.separation;
    if (o.blobs_seed) b.seed = *o.blobs_seed;
    cfg.data.blobs = b;
  }

  if (o.mode || o.p || o.r || o.epsilon) {
    CorruptionSpec spec = cfg.corruption.value_or(CorruptionSpec{});
    if (o.mode) spec.mode = parse_corruption_mode(*o.mode);
    if (o.p) spec.p = *o.p;
    if (o.r) spec.r = *o.r;
    if (o.epsilon) spec.epsilon = *o.epsilon;
    cfg.corruption = spec;
  }

  if (o.splits) {
    cfg.seeds.clear();
    for (int s = 0; s < *o.splits; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (o.seed) {
    if (command == "bench" || command == "sweep" || command == "ablate") {
      for (std::size_t i = 0; i < cfg.seeds.size(); ++i) cfg.seeds[i] = *o.seed + i;
    } else if (cfg.corruption) {
      cfg.corruption->seed = *o.seed;
    }
  }
  if (!o.methods.empty()) cfg.methods = o.methods;
  if (!o.mae_k.empty()) cfg.mae_k = o.mae_k;
  if (o.knn_k) cfg.knn_k = *o.knn_k;
  for (const auto& axis : o.grid) {
    const auto eq = axis.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidInput, "grid axis '" + axis + "' lacks '='");
    std::vector<double> values;
    std::stringstream ss(axis.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
    cfg.sweep[axis.substr(0, eq)] = values;
  }
  if (o.model) cfg.model_path = *o.model;
  if (o.predictions) cfg.predictions_path = *o.predictions;
  return cfg;
}

int write_bench(const plcl::BenchReport& report, const std::string& out_dir, const std::string& file) {
  const auto path = (std::filesystem::path(out_dir) / file).string();
  {
    auto out = plcl::detail::open_output(path);
    plcl::write_bench_csv(report, out);
  }
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& agg : report.aggregates) {
    std::cout << agg.method << ": test " << agg.test.mean << " +- " << agg.test.std << ", transductive "
              << agg.transductive.mean << " +- " << agg.transductive.std << '\n';
  }
  for (const auto& v : report.verdicts) {
    std::cout << v.reference << " vs " << v.method << ": " << plcl::to_string(v.verdict) << '\n';
  }
  std::cout << "wrote " << path << '\n';
  return report.any_failed() ? 1 : 0;
}

int run(const std::string& command, const Overrides& o) {
  using namespace plcl;
  const ExperimentConfig cfg = build_config(o, command);
  if (command == "synth") {
    const auto paths = cmd_synth(cfg);
    std::cout << "wrote " << paths.features << ", " << paths.candidates << ", " << paths.truth << ", "
              << paths.manifest << '\n';
    return 0;
  }
  if (command == "fit") {
    const auto model = cmd_fit(cfg);
    std::cout << "fit " << model.iterations << " iteration(s), converged=" << (model.converged ? "yes" : "no")
              << ", wrote " << default_model_path(cfg) << '\n';
    return 0;
  }
  if (command == "predict") {
    const auto labels = cmd_predict(cfg);
    if (cfg.predictions_path.empty()) {
      for (int label : labels) std::cout << label << '\n';
    }
    return 0;
  }
  if (command == "bench") return write_bench(run_bench(cfg, expand_methods(cfg.methods)), cfg.out, "bench.csv");
  if (command == "ablate") return write_bench(run_bench(cfg, ablation_methods()), cfg.out, "ablate.csv");
  if (command == "sweep") {
    const auto report = run_sweep(cfg);
    const auto path = (std::filesystem::path(cfg.out) / "sweep.csv").string();
    {
      auto out = detail::open_output(path);
      write_sweep_csv(report, out);
    }
    std::cout << "wrote " << path << '\n';
    return report.any_failed() ? 1 : 0;
  }
  throw Error(ErrorKind::InvalidInput, "unknown command " + command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial-label learning with a complementary classifier"};
  app.require_subcommand(1);
  Overrides overrides;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "write a corrupted dataset (features, candidates, truth, manifest)"},
      {"fit", "fit a model on the whole dataset and save it"},
      {"predict", "predict labels for a feature file with a saved model"},
      {"bench", "repeated train/test benchmark with paired t-test verdicts"},
      {"sweep", "hyper-parameter grid sweep"},
      {"ablate", "benchmark the kernel / complementary / graph ablations"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, overrides);
  } catch (const plcl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
