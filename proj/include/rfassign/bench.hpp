#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rfassign/data.hpp"
#include "rfassign/forest.hpp"

namespace rfassign {

enum class Strategy : std::uint8_t {
  Assignation,
  Mia,
  Median,
  Breiman,
  Ishioka,
  MissForest,
  Complete,  // trained on the data before missingness was injected
};

std::string_view to_string(Strategy s) noexcept;
/// Throws ConfigError listing the valid names.
Strategy parse_strategy(std::string_view name);
std::vector<Strategy> all_strategies();

struct BenchmarkConfig {
  std::size_t n_train = 200;
  std::size_t n_test = 2000;
  std::size_t n_reps = 100;
  double sigma = 1.0;
  std::size_t n_trees = 50;
  std::optional<std::size_t> mtry;      // default floor(p/3)
  std::size_t nodesize = 5;
  std::optional<std::size_t> min_leaf;  // q_n, default ceil((nodesize+1)/2)
  double subsample_frac = 0.632;
  double x1_rate = 0.20;
  double x3_rate = 0.10;
  std::vector<double> x4_rates{0.05, 0.10, 0.20, 0.40, 0.60, 0.80, 0.90, 0.95};
  std::vector<Strategy> strategies = all_strategies();
  std::uint64_t seed = 2021;
  std::size_t ishioka_k = 10;
  std::size_t proximity_iters = 5;
  double proximity_tol = 1e-3;
  std::size_t missforest_iters = 10;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  /// Forest parameters for a training set of n rows and p features.
  ForestParams forest_params(std::size_t n, std::size_t p, std::uint64_t seed) const;

  nlohmann::json to_json() const;
  /// Keys absent from `j` keep their defaults; unknown keys are rejected.
  static BenchmarkConfig from_json(const nlohmann::json& j);
};

struct StrategyRateResult {
  Strategy strategy = Strategy::Assignation;
  double x4_rate = 0.0;
  std::vector<double> mse;  // one per repetition
  double mean_mse = 0.0;
  double std_error = 0.0;
  double wall_seconds = 0.0;
};

struct BenchmarkResult {
  std::vector<StrategyRateResult> cells;  // strategy-major, then rate

  const StrategyRateResult& at(Strategy s, double x4_rate) const;
};

/// Mean over the test rows of (prediction - truth)^2; needs the noiseless truth.
double mse_vs_truth(std::span<const double> predictions, const Dataset& test);
double mse_vs_truth(const std::function<double(PointView)>& predictor, const Dataset& test);

/// Fit one strategy on a (clean, corrupted) training pair and return the
/// forest used for prediction.
Forest fit_strategy(Strategy s, const Dataset& clean, const Dataset& corrupted,
                    const BenchmarkConfig& cfg, const ForestParams& params);

/// The full grid; (repetition, rate) jobs run in parallel, with seeds derived
/// from (seed, repetition, rate index) so the schedule cannot change results.
BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);

namespace serial {
BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);
}

enum class OutputFormat : std::uint8_t { Csv, Json };

std::string detail_csv(const BenchmarkResult& result);
std::string summary_csv(const BenchmarkResult& result);
nlohmann::json result_json(const BenchmarkResult& result);

/// CSV: `results.csv` (strategy,x4_rate,rep,mse) and `summary.csv`
/// (strategy,x4_rate,mean_mse,stderr) in `out_dir`; JSON: `results.json`
/// holding both tables.
void emit(const BenchmarkResult& result, OutputFormat format,
          const std::filesystem::path& out_dir);

}  // namespace rfassign
