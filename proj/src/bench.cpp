#include "rfassign/bench.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>

#include "rfassign/baselines.hpp"
#include "rfassign/errors.hpp"
#include "rfassign/numeric.hpp"

namespace rfassign {

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::Assignation: return "assignation";
    case Strategy::Mia: return "mia";
    case Strategy::Median: return "median";
    case Strategy::Breiman: return "breiman";
    case Strategy::Ishioka: return "ishioka";
    case Strategy::MissForest: return "missforest";
    case Strategy::Complete: return "complete";
  }
  return "?";
}

std::vector<Strategy> all_strategies() {
  return {Strategy::Assignation, Strategy::Mia,        Strategy::Median,  Strategy::Breiman,
          Strategy::Ishioka,     Strategy::MissForest, Strategy::Complete};
}

Strategy parse_strategy(std::string_view name) {
  std::string valid;
  for (Strategy s : all_strategies()) {
    if (to_string(s) == name) return s;
    valid += valid.empty() ? "" : ", ";
    valid += to_string(s);
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "' (valid: " + valid + ")");
}

void BenchmarkConfig::validate() const {
  auto rate_ok = [](double r) { return r >= 0.0 && r < 1.0; };
  if (n_reps < 1) throw ConfigError("need at least one repetition");
  if (n_train < 1 || n_test < 1) throw ConfigError("training and test sizes must be positive");
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
  if (!rate_ok(x1_rate) || !rate_ok(x3_rate)) throw ConfigError("missing rates must lie in [0,1)");
  for (double r : x4_rates) {
    if (!rate_ok(r)) throw ConfigError("x4 rate " + format_double(r) + " outside [0,1)");
  }
  if (!(subsample_frac > 0.0 && subsample_frac <= 1.0)) {
    throw ConfigError("subsample fraction must lie in (0,1]");
  }
  if (strategies.empty()) throw ConfigError("no strategy selected");
  if (ishioka_k < 1) throw ConfigError("ishioka_k must be at least 1");
  forest_params(n_train, kFriedmanDims, seed).validate(n_train, kFriedmanDims);
}

ForestParams BenchmarkConfig::forest_params(std::size_t n, std::size_t p,
                                            std::uint64_t forest_seed) const {
  ForestParams fp;
  fp.n_trees = n_trees;
  fp.subsample_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(subsample_frac * static_cast<double>(n) - 1e-9)));
  fp.tree = TreeParams::defaults(p);
  if (mtry) fp.tree.mtry = *mtry;
  fp.tree.nodesize = nodesize;
  fp.tree.min_leaf = min_leaf.value_or(TreeParams::default_min_leaf(nodesize));
  fp.seed = forest_seed;
  return fp;
}

nlohmann::json BenchmarkConfig::to_json() const {
  nlohmann::json names = nlohmann::json::array();
  for (Strategy s : strategies) names.push_back(std::string(to_string(s)));
  nlohmann::json j{{"n_train", n_train},
                   {"n_test", n_test},
                   {"reps", n_reps},
                   {"sigma", sigma},
                   {"trees", n_trees},
                   {"nodesize", nodesize},
                   {"subsample_frac", subsample_frac},
                   {"x1_rate", x1_rate},
                   {"x3_rate", x3_rate},
                   {"x4_rates", x4_rates},
                   {"strategies", names},
                   {"seed", seed},
                   {"ishioka_k", ishioka_k},
                   {"proximity_iters", proximity_iters},
                   {"proximity_tol", proximity_tol},
                   {"missforest_iters", missforest_iters}};
  j["mtry"] = mtry ? nlohmann::json(*mtry) : nlohmann::json(nullptr);
  j["qn"] = min_leaf ? nlohmann::json(*min_leaf) : nlohmann::json(nullptr);
  return j;
}

BenchmarkConfig BenchmarkConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("benchmark config must be a JSON object");
  BenchmarkConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_train") c.n_train = v.get<std::size_t>();
      else if (key == "n_test") c.n_test = v.get<std::size_t>();
      else if (key == "reps") c.n_reps = v.get<std::size_t>();
      else if (key == "sigma") c.sigma = v.get<double>();
      else if (key == "trees") c.n_trees = v.get<std::size_t>();
      else if (key == "mtry") c.mtry = v.is_null() ? std::nullopt : std::optional(v.get<std::size_t>());
      else if (key == "nodesize") c.nodesize = v.get<std::size_t>();
      else if (key == "qn") c.min_leaf = v.is_null() ? std::nullopt : std::optional(v.get<std::size_t>());
      else if (key == "subsample_frac") c.subsample_frac = v.get<double>();
      else if (key == "x1_rate") c.x1_rate = v.get<double>();
      else if (key == "x3_rate") c.x3_rate = v.get<double>();
      else if (key == "x4_rates") c.x4_rates = v.get<std::vector<double>>();
      else if (key == "strategies") {
        c.strategies.clear();
        for (const auto& s : v) c.strategies.push_back(parse_strategy(s.get<std::string>()));
      }
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "ishioka_k") c.ishioka_k = v.get<std::size_t>();
      else if (key == "proximity_iters") c.proximity_iters = v.get<std::size_t>();
      else if (key == "proximity_tol") c.proximity_tol = v.get<double>();
      else if (key == "missforest_iters") c.missforest_iters = v.get<std::size_t>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("benchmark config: ") + e.what());
  }
  return c;
}

const StrategyRateResult& BenchmarkResult::at(Strategy s, double x4_rate) const {
  for (const auto& c : cells) {
    if (c.strategy == s && c.x4_rate == x4_rate) return c;
  }
  throw InvalidInput("no result for strategy " + std::string(to_string(s)) + " at rate " +
                     format_double(x4_rate));
}

double mse_vs_truth(std::span<const double> predictions, const Dataset& test) {
  const auto truth = test.truth();
  if (predictions.size() != truth.size()) {
    throw InvalidInput("mse: prediction count differs from test rows");
  }
  std::vector<double> sq(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = predictions[i] - truth[i];
    sq[i] = d * d;
  }
  return mean(sq);
}

double mse_vs_truth(const std::function<double(PointView)>& predictor, const Dataset& test) {
  test.truth();
  std::vector<double> pred(test.rows());
  for (std::size_t i = 0; i < test.rows(); ++i) pred[i] = predictor(test.row(i));
  return mse_vs_truth(pred, test);
}

Forest fit_strategy(Strategy s, const Dataset& clean, const Dataset& corrupted,
                    const BenchmarkConfig& cfg, const ForestParams& params) {
  const IterationControl control{cfg.proximity_iters, cfg.proximity_tol};
  switch (s) {
    case Strategy::Assignation: return fit_forest(corrupted, params);
    case Strategy::Mia: return fit_mia_forest(corrupted, params);
    case Strategy::Median: return fit_forest(impute_median(corrupted), params);
    case Strategy::Breiman:
      return fit_forest(impute_breiman(corrupted, params, control).data, params);
    case Strategy::Ishioka:
      return fit_forest(impute_ishioka(corrupted, params, cfg.ishioka_k, control).data, params);
    case Strategy::MissForest:
      return fit_forest(impute_missforest(corrupted, params, cfg.missforest_iters).data, params);
    case Strategy::Complete: return fit_forest(clean, params);
  }
  throw ConfigError("unhandled strategy");
}

namespace {

struct JobOutput {
  std::vector<double> mse;      // per strategy
  std::vector<double> seconds;  // per strategy
};

JobOutput run_job(const BenchmarkConfig& cfg, const Dataset& test, std::size_t rep,
                  std::size_t rate_idx) {
  const Dataset clean = generate_sample(cfg.n_train, cfg.sigma, derive_seed(cfg.seed, {1, rep}));
  const MissRates rates({cfg.x1_rate, 0.0, cfg.x3_rate, cfg.x4_rates[rate_idx], 0.0});
  const Dataset corrupted = inject_mcar(clean, rates, derive_seed(cfg.seed, {2, rep, rate_idx}));
  const ForestParams params =
      cfg.forest_params(cfg.n_train, kFriedmanDims, derive_seed(cfg.seed, {3, rep, rate_idx}));

  JobOutput out;
  for (Strategy s : cfg.strategies) {
    const auto start = std::chrono::steady_clock::now();
    const Forest forest = fit_strategy(s, clean, corrupted, cfg, params);
    out.mse.push_back(mse_vs_truth(serial::predict_rows(forest, test), test));
    out.seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return out;
}

BenchmarkResult run_impl(const BenchmarkConfig& cfg, bool parallel) {
  cfg.validate();
  const Dataset test = generate_sample(cfg.n_test, cfg.sigma, derive_seed(cfg.seed, {0}));
  const std::size_t n_rates = cfg.x4_rates.size();
  const std::size_t jobs = cfg.n_reps * n_rates;
  std::vector<JobOutput> outputs(jobs);

  std::exception_ptr error;
  const auto n_jobs = static_cast<std::ptrdiff_t>(jobs);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t sj = 0; sj < n_jobs; ++sj) {
    const auto job = static_cast<std::size_t>(sj);
    try {
      outputs[job] = run_job(cfg, test, job / n_rates, job % n_rates);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  BenchmarkResult result;
  for (std::size_t si = 0; si < cfg.strategies.size(); ++si) {
    for (std::size_t r = 0; r < n_rates; ++r) {
      StrategyRateResult cell;
      cell.strategy = cfg.strategies[si];
      cell.x4_rate = cfg.x4_rates[r];
      for (std::size_t rep = 0; rep < cfg.n_reps; ++rep) {
        const auto& o = outputs[rep * n_rates + r];
        cell.mse.push_back(o.mse[si]);
        cell.wall_seconds += o.seconds[si];
      }
      cell.mean_mse = mean(cell.mse);
      if (cell.mse.size() > 1) {
        std::vector<double> sq;
        for (double v : cell.mse) sq.push_back((v - cell.mean_mse) * (v - cell.mean_mse));
        const double var = pairwise_sum(sq) / static_cast<double>(cell.mse.size() - 1);
        cell.std_error = std::sqrt(var / static_cast<double>(cell.mse.size()));
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) { return run_impl(cfg, true); }

namespace serial {
BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) { return run_impl(cfg, false); }
}  // namespace serial

std::string detail_csv(const BenchmarkResult& result) {
  std::string out = "strategy,x4_rate,rep,mse\n";
  for (const auto& c : result.cells) {
    for (std::size_t rep = 0; rep < c.mse.size(); ++rep) {
      out += std::string(to_string(c.strategy)) + "," + format_double(c.x4_rate) + "," +
             std::to_string(rep) + "," + format_double(c.mse[rep]) + "\n";
    }
  }
  return out;
}

std::string summary_csv(const BenchmarkResult& result) {
  std::string out = "strategy,x4_rate,mean_mse,stderr\n";
  for (const auto& c : result.cells) {
    out += std::string(to_string(c.strategy)) + "," + format_double(c.x4_rate) + "," +
           format_double(c.mean_mse) + "," + format_double(c.std_error) + "\n";
  }
  return out;
}

nlohmann::json result_json(const BenchmarkResult& result) {
  nlohmann::json detail = nlohmann::json::array();
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& c : result.cells) {
    const std::string name(to_string(c.strategy));
    for (std::size_t rep = 0; rep < c.mse.size(); ++rep) {
      detail.push_back({{"strategy", name}, {"x4_rate", c.x4_rate}, {"rep", rep}, {"mse", c.mse[rep]}});
    }
    summary.push_back({{"strategy", name},
                       {"x4_rate", c.x4_rate},
                       {"mean_mse", c.mean_mse},
                       {"stderr", c.std_error}});
  }
  return {{"detail", std::move(detail)}, {"summary", std::move(summary)}};
}

void emit(const BenchmarkResult& result, OutputFormat format,
          const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  if (format == OutputFormat::Csv) {
    write_text(out_dir / "results.csv", detail_csv(result));
    write_text(out_dir / "summary.csv", summary_csv(result));
  } else {
    write_text(out_dir / "results.json", result_json(result).dump(2) + "\n");
  }
}

}  // namespace rfassign
