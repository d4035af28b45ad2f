// Command-line front end: simulate, corrupt, train, predict, bench.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rfassign/baselines.hpp"
#include "rfassign/bench.hpp"
#include "rfassign/data.hpp"
#include "rfassign/errors.hpp"
#include "rfassign/forest.hpp"

namespace {

using namespace rfassign;

struct ForestFlags {
  std::optional<std::size_t> trees;
  std::optional<std::size_t> mtry;
  std::optional<std::size_t> nodesize;
  std::optional<std::size_t> qn;
  std::optional<double> subsample_frac;
  std::uint64_t seed = 2021;

  void attach(CLI::App* app) {
    app->add_option("--trees", trees, "Number of trees M");
    app->add_option("--mtry", mtry, "Candidate directions per node");
    app->add_option("--nodesize", nodesize, "Maximum observations in a final cell");
    app->add_option("--qn", qn, "Minimum observations per child (q_n)");
    app->add_option("--subsample-frac", subsample_frac, "a_n = ceil(frac * n)");
    app->add_option("--seed", seed, "Master seed");
  }

  void apply(BenchmarkConfig& cfg) const {
    if (trees) cfg.n_trees = *trees;
    if (mtry) cfg.mtry = *mtry;
    if (nodesize) cfg.nodesize = *nodesize;
    if (qn) cfg.min_leaf = *qn;
    if (subsample_frac) cfg.subsample_frac = *subsample_frac;
  }
};

int run_simulate(std::size_t n, double sigma, std::uint64_t seed, const std::string& out) {
  write_csv(generate_sample(n, sigma, seed), out);
  return 0;
}

int run_corrupt(const std::string& in, const std::string& out, const std::vector<double>& rates,
                std::uint64_t seed) {
  const Dataset data = read_csv(in);
  write_csv(inject_mcar(data, MissRates(rates), seed), out);
  return 0;
}

int run_train(const std::string& in, const std::string& out, const std::string& strategy,
              const ForestFlags& flags) {
  const Dataset data = read_csv(in);
  BenchmarkConfig cfg;
  flags.apply(cfg);
  const ForestParams params = cfg.forest_params(data.rows(), data.cols(), flags.seed);
  const Strategy s = parse_strategy(strategy);
  if (s == Strategy::Complete) {
    throw ConfigError("'complete' needs clean data; train with 'assignation' on a complete file");
  }
  save_forest(fit_strategy(s, data, data, cfg, params), out);
  return 0;
}

int run_predict(const std::string& forest_path, const std::string& in, const std::string& out,
                const std::string& mode_name, std::uint64_t seed) {
  const Forest forest = load_forest(forest_path);
  const Dataset data = read_csv(in, forest.dims);
  PredictMode mode = PredictMode::Fractional;
  if (mode_name == "stochastic") {
    mode = PredictMode::Stochastic;
  } else if (mode_name != "fractional") {
    throw ConfigError("mode must be 'fractional' or 'stochastic'");
  }
  const auto pred = predict_rows(forest, data, mode, seed);
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw IoError("cannot write " + out);
    f << "prediction\n";
    for (double v : pred) f << format_double(v) << '\n';
  }
  if (data.has_truth()) {
    std::cout << "mse_vs_truth " << format_double(mse_vs_truth(pred, data)) << '\n';
  }
  return 0;
}

int run_bench(BenchmarkConfig cfg, const std::string& out, const std::string& format,
              bool quiet) {
  OutputFormat fmt = OutputFormat::Csv;
  if (format == "json") {
    fmt = OutputFormat::Json;
  } else if (format != "csv") {
    throw ConfigError("format must be 'csv' or 'json'");
  }
  const BenchmarkResult result = run_benchmark(cfg);
  emit(result, fmt, out);
  if (!quiet) {
    std::printf("%-12s %8s %10s %9s %9s\n", "strategy", "x4_rate", "mean_mse", "stderr", "wall_s");
    for (const auto& c : result.cells) {
      std::printf("%-12s %8.2f %10.4f %9.4f %9.2f\n", std::string(to_string(c.strategy)).c_str(),
                  c.x4_rate, c.mean_mse, c.std_error, c.wall_seconds);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random forests with joint split-and-assignation of missing values"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "Write a friedman1 sample as CSV");
  std::size_t sim_n = 200;
  double sim_sigma = 1.0;
  std::uint64_t sim_seed = 2021;
  std::string sim_out;
  sim->add_option("--n", sim_n, "Number of rows");
  sim->add_option("--sigma", sim_sigma, "Noise standard deviation");
  sim->add_option("--seed", sim_seed, "Seed");
  sim->add_option("--out", sim_out, "Output CSV")->required();

  auto* cor = app.add_subcommand("corrupt", "Inject MCAR missing values");
  std::string cor_in;
  std::string cor_out;
  std::vector<double> cor_rates;
  std::uint64_t cor_seed = 2021;
  cor->add_option("--in", cor_in, "Input CSV")->required();
  cor->add_option("--out", cor_out, "Output CSV")->required();
  cor->add_option("--rates", cor_rates, "Per-column missing rates, comma separated")
      ->required()
      ->delimiter(',');
  cor->add_option("--seed", cor_seed, "Seed");

  auto* train = app.add_subcommand("train", "Fit a forest and write it as JSON");
  std::string train_in;
  std::string train_out;
  std::string train_strategy = "assignation";
  ForestFlags train_flags;
  train->add_option("--in", train_in, "Training CSV")->required();
  train->add_option("--out", train_out, "Forest JSON")->required();
  train->add_option("--strategy", train_strategy,
                    "assignation | mia | median | breiman | ishioka | missforest");
  train_flags.attach(train);

  auto* pred = app.add_subcommand("predict", "Score a CSV with a trained forest");
  std::string pred_forest;
  std::string pred_in;
  std::string pred_out;
  std::string pred_mode = "fractional";
  std::uint64_t pred_seed = 2021;
  pred->add_option("--forest", pred_forest, "Forest JSON")->required();
  pred->add_option("--in", pred_in, "CSV to score")->required();
  pred->add_option("--out", pred_out, "Prediction CSV");
  pred->add_option("--mode", pred_mode, "fractional | stochastic");
  pred->add_option("--seed", pred_seed, "Seed for stochastic routing");

  auto* bench = app.add_subcommand("bench", "Run the missing-rate benchmark grid");
  std::string bench_config;
  std::optional<std::size_t> bench_reps;
  std::optional<std::size_t> bench_n_train;
  std::optional<std::size_t> bench_n_test;
  std::optional<double> bench_sigma;
  std::vector<double> bench_rates;
  std::vector<std::string> bench_strategies;
  std::string bench_out = "bench_out";
  std::string bench_format = "csv";
  bool bench_quiet = false;
  ForestFlags bench_flags;
  bench->add_option("--config", bench_config, "JSON config file");
  bench->add_option("--reps", bench_reps, "Repetitions (20 for a quick run, 100 for the full grid)");
  bench->add_option("--n-train", bench_n_train, "Training rows");
  bench->add_option("--n-test", bench_n_test, "Test rows");
  bench->add_option("--sigma", bench_sigma, "Noise standard deviation");
  bench->add_option("--x4-rates", bench_rates, "Missing rates of x4")->delimiter(',');
  bench->add_option("--strategies", bench_strategies, "Strategies to run")->delimiter(',');
  bench->add_option("--out", bench_out, "Output directory");
  bench->add_option("--format", bench_format, "csv | json");
  bench->add_flag("--quiet", bench_quiet, "Do not print the summary table");
  bench_flags.attach(bench);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return run_simulate(sim_n, sim_sigma, sim_seed, sim_out);
    if (*cor) return run_corrupt(cor_in, cor_out, cor_rates, cor_seed);
    if (*train) return run_train(train_in, train_out, train_strategy, train_flags);
    if (*pred) return run_predict(pred_forest, pred_in, pred_out, pred_mode, pred_seed);
    if (*bench) {
      BenchmarkConfig cfg;
      if (!bench_config.empty()) {
        std::ifstream f(bench_config);
        if (!f) throw IoError("cannot open " + bench_config);
        nlohmann::json j;
        try {
          f >> j;
        } catch (const nlohmann::json::exception& e) {
          throw ConfigError(std::string("config: ") + e.what());
        }
        cfg = BenchmarkConfig::from_json(j);
      }
      if (bench_reps) cfg.n_reps = *bench_reps;
      if (bench_n_train) cfg.n_train = *bench_n_train;
      if (bench_n_test) cfg.n_test = *bench_n_test;
      if (bench_sigma) cfg.sigma = *bench_sigma;
      if (!bench_rates.empty()) cfg.x4_rates = bench_rates;
      if (!bench_strategies.empty()) {
        cfg.strategies.clear();
        for (const auto& s : bench_strategies) cfg.strategies.push_back(parse_strategy(s));
      }
      bench_flags.apply(cfg);
      if (bench->count("--seed") > 0 || bench_config.empty()) cfg.seed = bench_flags.seed;
      return run_bench(cfg, bench_out, bench_format, bench_quiet);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
