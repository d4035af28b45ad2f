#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "rfassign/bench.hpp"
#include "rfassign/errors.hpp"

namespace rfassign {
namespace {

BenchmarkConfig tiny_config() {
  BenchmarkConfig cfg;
  cfg.n_train = 60;
  cfg.n_test = 100;
  cfg.n_reps = 2;
  cfg.n_trees = 4;
  cfg.proximity_iters = 2;
  cfg.missforest_iters = 2;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_lines(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

class BenchFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { result_ = new BenchmarkResult(run_benchmark(tiny_config())); }
  static void TearDownTestSuite() {
    delete result_;
    result_ = nullptr;
  }
  static const BenchmarkResult& result() { return *result_; }

 private:
  static BenchmarkResult* result_;
};

BenchmarkResult* BenchFixture::result_ = nullptr;

TEST(Mse, HandValues) {
  const Dataset test(1, {0.1, 0.2}, {0, 0}, {0.0, 0.0}, std::vector<double>{0.0, 2.0});
  EXPECT_EQ(mse_vs_truth(std::vector<double>{0.0, 2.0}, test), 0.0);
  EXPECT_EQ(mse_vs_truth(std::vector<double>{1.0, 1.0}, test), 1.0);
  EXPECT_EQ(mse_vs_truth([](PointView) { return 1.0; }, test), 1.0);
  EXPECT_THROW(mse_vs_truth(std::vector<double>{1.0}, test), InvalidInput);
  const Dataset no_truth(1, {0.1}, {0}, {0.0});
  EXPECT_THROW(mse_vs_truth(std::vector<double>{1.0}, no_truth), ConfigError);
}

TEST(Mse, ConstantMeanPredictorGivesVariance) {
  const Dataset test = generate_sample(500, 0.0, 4);
  const auto truth = test.truth();
  double m = 0.0;
  for (double t : truth) m += t;
  m /= static_cast<double>(truth.size());
  double var = 0.0;
  for (double t : truth) var += (t - m) * (t - m);
  var /= static_cast<double>(truth.size());
  EXPECT_NEAR(mse_vs_truth([m](PointView) { return m; }, test), var, 1e-10);
}

TEST(Strategy, NamesRoundTrip) {
  const auto all = all_strategies();
  EXPECT_EQ(all.size(), 7u);
  for (Strategy s : all) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_EQ(to_string(Strategy::MissForest), "missforest");
  try {
    parse_strategy("knn");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("assignation"), std::string::npos);
  }
}

TEST(BenchmarkConfig, JsonRoundTripAndValidation) {
  BenchmarkConfig cfg = tiny_config();
  cfg.mtry = 2;
  cfg.strategies = {Strategy::Median, Strategy::Complete};
  cfg.x4_rates = {0.3, 0.7};
  const auto back = BenchmarkConfig::from_json(nlohmann::json::parse(cfg.to_json().dump()));
  EXPECT_EQ(back.to_json(), cfg.to_json());
  EXPECT_THROW(BenchmarkConfig::from_json({{"bogus", 1}}), ConfigError);
  BenchmarkConfig bad;
  bad.x4_rates = {1.0};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = BenchmarkConfig{};
  bad.n_reps = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = BenchmarkConfig{};
  bad.strategies.clear();
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(BenchmarkConfig, ForestParameters) {
  const BenchmarkConfig cfg;
  const auto fp = cfg.forest_params(200, 5, 9);
  EXPECT_EQ(fp.subsample_size, 127u);
  EXPECT_EQ(fp.n_trees, 50u);
  EXPECT_EQ(fp.tree, TreeParams::defaults(5));
  EXPECT_EQ(fp.seed, 9u);
}

TEST_F(BenchFixture, GridShape) {
  const auto& r = result();
  EXPECT_EQ(r.cells.size(), 7u * 8u);
  for (const auto& c : r.cells) {
    ASSERT_EQ(c.mse.size(), 2u);
    for (double v : c.mse) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GT(v, 0.0);
    }
  }
  EXPECT_EQ(r.at(Strategy::Ishioka, 0.4).strategy, Strategy::Ishioka);
  EXPECT_THROW(r.at(Strategy::Ishioka, 0.33), InvalidInput);
}

TEST_F(BenchFixture, SummaryMatchesDetail) {
  const auto detail = parse_lines(detail_csv(result()));
  const auto summary = parse_lines(summary_csv(result()));
  ASSERT_EQ(detail.front(), (std::vector<std::string>{"strategy", "x4_rate", "rep", "mse"}));
  ASSERT_EQ(summary.front(), (std::vector<std::string>{"strategy", "x4_rate", "mean_mse", "stderr"}));
  EXPECT_EQ(detail.size(), 1u + 7u * 8u * 2u);
  EXPECT_EQ(summary.size(), 1u + 7u * 8u);
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (std::size_t k = 1; k < detail.size(); ++k) {
    groups[{detail[k][0], detail[k][1]}].push_back(std::stod(detail[k][3]));
  }
  for (std::size_t k = 1; k < summary.size(); ++k) {
    const auto& g = groups.at({summary[k][0], summary[k][1]});
    ASSERT_EQ(g.size(), 2u);
    const double m = 0.5 * (g[0] + g[1]);
    const double se = std::abs(g[0] - g[1]) / 2.0;  // sample sd / sqrt(2) for two values
    EXPECT_NEAR(std::stod(summary[k][2]), m, 1e-9 * std::max(1.0, m));
    EXPECT_NEAR(std::stod(summary[k][3]), se, 1e-9 * std::max(1.0, se));
  }
}

TEST_F(BenchFixture, JsonCarriesBothTables) {
  const auto j = result_json(result());
  ASSERT_EQ(j.at("detail").size(), 7u * 8u * 2u);
  ASSERT_EQ(j.at("summary").size(), 7u * 8u);
  EXPECT_EQ(j.at("summary")[0].at("strategy"), "assignation");
  EXPECT_DOUBLE_EQ(j.at("summary")[0].at("mean_mse").get<double>(), result().cells[0].mean_mse);
}

TEST_F(BenchFixture, ParallelRunMatchesSerialReference) {
  const int saved = omp_get_max_threads();
  omp_set_num_threads(3);
  const auto again = run_benchmark(tiny_config());
  omp_set_num_threads(saved);
  EXPECT_EQ(detail_csv(again), detail_csv(result()));
  auto cfg = tiny_config();
  cfg.n_reps = 1;
  cfg.x4_rates = {0.2, 0.9};
  EXPECT_EQ(detail_csv(run_benchmark(cfg)), detail_csv(serial::run_benchmark(cfg)));
}

TEST_F(BenchFixture, EmitWritesFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "rfassign_bench_emit";
  std::filesystem::remove_all(dir);
  emit(result(), OutputFormat::Csv, dir);
  EXPECT_EQ(slurp(dir / "results.csv"), detail_csv(result()));
  EXPECT_EQ(slurp(dir / "summary.csv"), summary_csv(result()));
  emit(result(), OutputFormat::Json, dir);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "results.json")), result_json(result()));
  std::filesystem::remove_all(dir);
}

TEST(Emit, EmptyResultWritesHeadersOnly) {
  const BenchmarkResult empty;
  EXPECT_EQ(detail_csv(empty), "strategy,x4_rate,rep,mse\n");
  EXPECT_EQ(summary_csv(empty), "strategy,x4_rate,mean_mse,stderr\n");
}

TEST(Benchmark, SingleRepIsDeterministic) {
  auto cfg = tiny_config();
  cfg.n_reps = 1;
  cfg.x4_rates = {0.5};
  cfg.strategies = {Strategy::Assignation, Strategy::Median};
  const auto a = run_benchmark(cfg);
  EXPECT_EQ(detail_csv(a), detail_csv(run_benchmark(cfg)));
  EXPECT_EQ(a.cells[0].std_error, 0.0);
  cfg.seed += 1;
  EXPECT_NE(detail_csv(a), detail_csv(run_benchmark(cfg)));
}

}  // namespace
}  // namespace rfassign
