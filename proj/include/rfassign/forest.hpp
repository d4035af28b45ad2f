#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfassign/data.hpp"
#include "rfassign/rng.hpp"
#include "rfassign/tree.hpp"

namespace rfassign {

struct ForestParams {
  std::size_t n_trees = 50;
  std::size_t subsample_size = 1;  // a_n, drawn without replacement
  TreeParams tree;
  std::uint64_t seed = 0;

  /// M = 50, a_n = ceil(0.632 n), tree defaults for p features.
  static ForestParams defaults(std::size_t n, std::size_t p);
  static std::size_t default_subsample(std::size_t n) noexcept {
    return (632 * n + 999) / 1000;
  }

  /// Throws ConfigError unless M >= 1, 1 <= a_n <= n, nodesize <= a_n and the
  /// tree parameters are valid for p.
  void validate(std::size_t n, std::size_t p) const;

  nlohmann::json to_json() const;
  static ForestParams from_json(const nlohmann::json& j);

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct Forest {
  std::vector<Tree> trees;
  std::vector<std::vector<std::size_t>> subsamples;  // sorted row indices per tree
  ForestParams params;
  std::string splitter = "assignation";
  std::size_t dims = 0;

  std::size_t size() const noexcept { return trees.size(); }

  friend bool operator==(const Forest&, const Forest&) = default;
};

/// Subsample and tree for index k, from the stream derived from (seed, k).
std::pair<std::vector<std::size_t>, Tree> fit_tree_k(const Dataset& data,
                                                     const ForestParams& params,
                                                     const SplitFinder& finder, std::size_t k);

/// Trees are grown in parallel; the result does not depend on the schedule.
Forest fit_forest(const Dataset& data, const ForestParams& params,
                  const SplitFinder& finder = assignation_split_finder(),
                  std::string splitter = "assignation");

double predict_forest(const Forest& forest, PointView x,
                      PredictMode mode = PredictMode::Fractional, Rng* rng = nullptr);

/// Predictions for every row of `data`. Stochastic mode uses one stream per
/// row derived from (seed, row).
std::vector<double> predict_rows(const Forest& forest, const Dataset& data,
                                 PredictMode mode = PredictMode::Fractional,
                                 std::uint64_t seed = 0);

/// K(i, j) = fraction of trees in which rows i and j end in the same terminal
/// node (see Tree::terminal_node).
SquareMatrix proximity(const Forest& forest, const Dataset& data);

/// Single-threaded reference versions of the parallel kernels.
namespace serial {
Forest fit_forest(const Dataset& data, const ForestParams& params,
                  const SplitFinder& finder = assignation_split_finder(),
                  std::string splitter = "assignation");
std::vector<double> predict_rows(const Forest& forest, const Dataset& data,
                                 PredictMode mode = PredictMode::Fractional,
                                 std::uint64_t seed = 0);
SquareMatrix proximity(const Forest& forest, const Dataset& data);
}  // namespace serial

nlohmann::json forest_to_json(const Forest& forest);
Forest forest_from_json(const nlohmann::json& j);
void save_forest(const Forest& forest, const std::filesystem::path& path);
Forest load_forest(const std::filesystem::path& path);

}  // namespace rfassign
