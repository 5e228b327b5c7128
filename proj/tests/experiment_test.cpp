#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "plcl/experiment.hpp"
#include "test_support.hpp"

using plcl::ErrorKind;
using plcl::ExperimentConfig;
using plcl::Verdict;

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("plcl_exp_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  [[nodiscard]] std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const std::string& log) {
  const std::string cmd = std::string(PLCL_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig small_blobs(double separation = 4.0) {
  ExperimentConfig cfg;
  plcl::BlobSettings blobs;
  blobs.n = 60;
  blobs.labels = 3;
  blobs.features = 2;
  blobs.separation = separation;
  blobs.seed = 3;
  cfg.data.blobs = blobs;
  plcl::CorruptionSpec spec;
  spec.p = 0.5;
  spec.r = 1;
  spec.seed = 11;
  cfg.corruption = spec;
  cfg.seeds = {0, 1, 2};
  cfg.params.k = 5;
  return cfg;
}

}  // namespace

TEST(Config, FromJson) {
  const auto j = nlohmann::json::parse(R"({
    "data": {"blobs": {"n": 40, "l": 4, "q": 3, "separation": 2.5, "seed": 7}},
    "corruption": {"mode": "coupled-epsilon", "p": 0.3, "epsilon": 0.4, "seed": 5},
    "params": {"alpha": 0.2, "lambda": 0.5, "k": 7},
    "splits": 4, "ratio": 0.7, "methods": ["plcl", "plcl-ablations"],
    "mae_k": [3, 5], "sweep": {"alpha": [0.1, 1]}, "threads": 2
  })");
  const auto cfg = plcl::config_from_json(j);
  ASSERT_TRUE(cfg.data.blobs.has_value());
  EXPECT_EQ(cfg.data.blobs->n, 40);
  EXPECT_EQ(cfg.data.blobs->labels, 4);
  EXPECT_EQ(cfg.data.blobs->separation, 2.5);
  ASSERT_TRUE(cfg.corruption.has_value());
  EXPECT_EQ(cfg.corruption->mode, plcl::CorruptionMode::CoupledEpsilon);
  EXPECT_EQ(cfg.corruption->epsilon, 0.4);
  EXPECT_EQ(cfg.params.alpha, 0.2);
  EXPECT_EQ(cfg.params.lambda, 0.5);
  EXPECT_EQ(cfg.params.k, 7);
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{0, 1, 2, 3}));
  EXPECT_EQ(cfg.ratio, 0.7);
  EXPECT_EQ(plcl::expand_methods(cfg.methods),
            (std::vector<std::string>{"plcl", "plcl-linear", "plcl-kernel", "plcl-no-comp", "plcl-no-graph"}));
  EXPECT_EQ(cfg.threads, 2);

  EXPECT_PLCL_ERROR(plcl::config_from_json(nlohmann::json::parse(R"({"splits": "x"})")), ErrorKind::ParseError);
  EXPECT_PLCL_ERROR(plcl::config_from_json(nlohmann::json::parse(R"({"splits": 0})")), ErrorKind::InvalidInput);
  EXPECT_PLCL_ERROR(plcl::config_from_json(nlohmann::json::parse(R"({"params": {"zeta": 1}})")),
                    ErrorKind::InvalidInput);
  EXPECT_PLCL_ERROR(plcl::resolve_method("svm"), ErrorKind::InvalidInput);
}

TEST(Serialization, RoundTripAndVersion) {
  auto cfg = small_blobs();
  const auto data = plcl::apply_corruption(plcl::load_source(cfg.data), *cfg.corruption);
  const auto model = plcl::fit(data, cfg.params);
  const auto restored = plcl::model_from_json(plcl::model_to_json(model));
  const plcl::Matrix probe = data.X.topRows(10).array() + 0.25;
  EXPECT_EQ(plcl::predict(restored, probe), plcl::predict(model, probe));
  EXPECT_EQ(plcl::transductive_labels(restored), plcl::transductive_labels(model));
  EXPECT_EQ(restored.iterations, model.iterations);

  auto j = plcl::model_to_json(model);
  j["version"] = 999;
  EXPECT_PLCL_ERROR(plcl::model_from_json(j), ErrorKind::VersionMismatch);
  EXPECT_PLCL_ERROR(plcl::model_from_json(nlohmann::json::object()), ErrorKind::VersionMismatch);
}

TEST(Bench, IdenticalMethodsTie) {
  auto cfg = small_blobs();
  const auto report = plcl::run_bench(cfg, {"plcl", "plcl"});
  EXPECT_FALSE(report.any_failed());
  ASSERT_EQ(report.runs.size(), 6u);
  EXPECT_EQ(report.test_accuracies("plcl").size(), 6u);
  ASSERT_FALSE(report.verdicts.empty());
  for (const auto& v : report.verdicts) EXPECT_EQ(v.verdict, Verdict::Tie);
}

TEST(Bench, SingleSplitVerdictIsUndefined) {
  auto cfg = small_blobs();
  cfg.seeds = {4};
  const auto report = plcl::run_bench(cfg, {"plcl", "pl-knn"});
  ASSERT_EQ(report.verdicts.size(), 1u);
  EXPECT_FALSE(report.verdicts[0].defined);
  EXPECT_EQ(report.verdicts[0].verdict, Verdict::Tie);
  EXPECT_FALSE(report.warnings.empty());
}

TEST(Bench, DeterministicAcrossThreadCounts) {
  auto cfg = small_blobs();
  const auto serial = plcl::run_bench(cfg, {"plcl", "pl-knn"});
  cfg.threads = 3;
  const auto parallel = plcl::run_bench(cfg, {"plcl", "pl-knn"});
  std::ostringstream a;
  std::ostringstream b;
  plcl::write_bench_csv(serial, a);
  plcl::write_bench_csv(parallel, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Sweep, LambdaExtremesAreFinite) {
  auto cfg = small_blobs();
  cfg.sweep["lambda"] = {0.001, 4.0};
  const auto report = plcl::run_sweep(cfg);
  ASSERT_EQ(report.rows.size(), 6u);
  EXPECT_FALSE(report.any_failed());
  for (const auto& row : report.rows) {
    EXPECT_TRUE(std::isfinite(row.run.result.test_accuracy));
    EXPECT_TRUE(std::isfinite(row.run.result.transductive_accuracy));
  }
  EXPECT_EQ(report.rows.front().params.lambda, 0.001);
  EXPECT_EQ(report.rows.back().params.lambda, 4.0);
}

TEST(Sweep, AlphaIsInsensitive) {
  auto cfg = small_blobs();
  cfg.data.blobs->n = 90;
  cfg.sweep["alpha"] = {0.001, 0.01, 0.1, 0.2, 0.5, 1, 1.5, 2, 4};
  const auto report = plcl::run_sweep(cfg);
  ASSERT_FALSE(report.any_failed());
  double lo = 1.0;
  double hi = 0.0;
  for (std::size_t g = 0; g < 9; ++g) {
    double mean = 0.0;
    for (std::size_t s = 0; s < 3; ++s) mean += report.rows[g * 3 + s].run.result.test_accuracy / 3.0;
    lo = std::min(lo, mean);
    hi = std::max(hi, mean);
  }
  EXPECT_LT(hi - lo, 0.15);
}

TEST(Sweep, SinglePointMatchesBench) {
  auto cfg = small_blobs();
  cfg.sweep["beta"] = {cfg.params.beta};
  const auto sweep = plcl::run_sweep(cfg);
  const auto bench = plcl::run_bench(cfg, {"plcl"});
  ASSERT_EQ(sweep.rows.size(), bench.runs.size());
  for (std::size_t i = 0; i < bench.runs.size(); ++i) {
    EXPECT_EQ(sweep.rows[i].run.result.test_accuracy, bench.runs[i].result.test_accuracy);
    EXPECT_EQ(sweep.rows[i].run.result.transductive_accuracy, bench.runs[i].result.transductive_accuracy);
  }
}

TEST(Sweep, Errors) {
  auto cfg = small_blobs();
  EXPECT_PLCL_ERROR(plcl::run_sweep(cfg), ErrorKind::InvalidInput);
  cfg.sweep["k"] = {3};
  EXPECT_PLCL_ERROR(plcl::run_sweep(cfg), ErrorKind::InvalidInput);
}

TEST(Cli, SynthIsReproducible) {
  TempDir dir;
  const std::string args = "synth --blobs-n 50 --blobs-l 4 --p 0.5 --r 2 --seed 9 --out ";
  ASSERT_EQ(run_cli(args + dir / "a", dir / "log"), 0) << slurp(dir / "log");
  ASSERT_EQ(run_cli(args + dir / "b", dir / "log"), 0) << slurp(dir / "log");
  for (const std::string f : {"features.csv", "candidates.csv", "truth.csv", "manifest.json"}) {
    const auto a = slurp(dir / ("a/" + f));
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(dir / ("b/" + f))) << f;
  }
  const auto manifest = nlohmann::json::parse(slurp(dir / "a/manifest.json"));
  EXPECT_EQ(manifest.at("seed").get<int>(), 9);
  EXPECT_EQ(manifest.at("r").get<int>(), 2);
}

TEST(Cli, SynthRejectsImpossibleSpec) {
  TempDir dir;
  EXPECT_NE(run_cli("synth --blobs-n 30 --blobs-l 3 --p 0.5 --r 3 --out " + dir / "x", dir / "log"), 0);
  EXPECT_NE(run_cli("synth --blobs-n 30 --p 1.5 --out " + dir / "x", dir / "log"), 0);
  EXPECT_NE(run_cli("bench --features " + dir / "missing.csv" + " --candidates " + dir / "missing.csv" + " --out " +
                        dir / "x",
                    dir / "log"),
            0);
}

TEST(Cli, FitPredictRoundTrip) {
  TempDir dir;
  const std::string data = dir / "data";
  ASSERT_EQ(run_cli("synth --blobs-n 60 --separation 10 --p 0.3 --r 1 --seed 2 --out " + data, dir / "log"), 0)
      << slurp(dir / "log");
  const std::string files = " --features " + data + "/features.csv --candidates " + data + "/candidates.csv --truth " +
                            data + "/truth.csv";
  ASSERT_EQ(run_cli("fit" + files + " --k 5 --model " + dir / "model.json", dir / "log"), 0) << slurp(dir / "log");
  ASSERT_EQ(run_cli("predict --features " + data + "/features.csv --model " + dir / "model.json" + " --predictions " +
                        dir / "pred.csv",
                    dir / "log"),
            0)
      << slurp(dir / "log");

  const auto model = plcl::load_model(dir / "model.json");
  const auto predicted = plcl::read_labels(dir / "pred.csv");
  EXPECT_EQ(predicted, plcl::transductive_labels(model));
  const auto truth = plcl::read_labels(data + "/truth.csv");
  EXPECT_GE(plcl::accuracy(predicted, truth), 0.95);

  // Wrong feature dimension.
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "1,2,3\n4,5,6\n";
  }
  EXPECT_NE(run_cli("predict --features " + dir / "bad.csv" + " --model " + dir / "model.json", dir / "log"), 0);
}

TEST(Cli, BenchWritesCsvAndWarns) {
  TempDir dir;
  ASSERT_EQ(run_cli("bench --blobs-n 40 --p 0.5 --r 1 --k 4 --splits 1 --methods plcl,pl-knn --out " + dir / "out",
                    dir / "log"),
            0)
      << slurp(dir / "log");
  const auto csv = slurp(dir / "out/bench.csv");
  EXPECT_NE(csv.find("plcl"), std::string::npos);
  EXPECT_NE(csv.find("pl-knn"), std::string::npos);
  EXPECT_NE(csv.find("undefined"), std::string::npos);
  EXPECT_NE(slurp(dir / "log").find("warning"), std::string::npos);
}

TEST(Cli, SweepWritesRows) {
  TempDir dir;
  ASSERT_EQ(run_cli("sweep --blobs-n 40 --p 0.5 --r 1 --k 4 --splits 2 --grid lambda=0.001,4 --out " + dir / "out",
                    dir / "log"),
            0)
      << slurp(dir / "log");
  std::ifstream in(dir / "out/sweep.csv");
  std::string line;
  int sweep_rows = 0;
  int aggregate_rows = 0;
  while (std::getline(in, line)) {
    if (line.rfind("sweep,", 0) == 0) ++sweep_rows;
    if (line.rfind("aggregate,", 0) == 0) ++aggregate_rows;
    EXPECT_EQ(line.find("nan"), std::string::npos) << line;
  }
  EXPECT_EQ(sweep_rows, 4);
  EXPECT_EQ(aggregate_rows, 2);
}
