#pragma once

// Comparison strategies built on the same tree and forest machinery:
// median imputation, MIA splits, Breiman's and Ishioka's proximity
// imputation, and missForest.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rfassign/data.hpp"
#include "rfassign/forest.hpp"
#include "rfassign/split.hpp"
#include "rfassign/tree.hpp"

namespace rfassign {

/// Lower median of the observed values of every column. Throws ConfigError
/// when a column has no observed value.
std::vector<double> column_medians(const Dataset& data);

/// Every masked entry replaced by its column's lower median; the result has
/// an empty mask.
Dataset impute_median(const Dataset& data);

// ---------------------------------------------------------------------------
// MIA

enum class MiaRule : std::uint8_t {
  MissingLeft,          // {x <= z or missing} vs {x > z}
  MissingRight,         // {x <= z} vs {x > z or missing}
  ObservedVsMissing,    // {observed} vs {missing}
};

struct MiaSplit {
  std::size_t direction = 0;
  MiaRule rule = MiaRule::MissingLeft;
  std::optional<double> threshold;  // absent for ObservedVsMissing
  double score = 0.0;
};

/// Per-member side (1 = left) of an MIA split, in the cell's member order.
std::vector<std::uint8_t> mia_partition(const Cell& cell, const Dataset& data,
                                        const MiaSplit& split);

/// Best MIA split scored by the complete-data CART criterion on the induced
/// partition. Ties: smallest direction, smallest threshold, rule order above,
/// with ObservedVsMissing ranked after every thresholded rule.
std::optional<MiaSplit> best_mia_split(const Cell& cell, const Dataset& data,
                                       std::span<const std::size_t> directions,
                                       std::size_t q_n);

SplitFinder mia_split_finder();

Forest fit_mia_forest(const Dataset& data, const ForestParams& params);

// ---------------------------------------------------------------------------
// Iterative imputers

struct ImputationResult {
  Dataset data;                 // complete: every masked entry filled, empty mask
  std::size_t iterations = 0;   // update steps performed
  std::vector<double> changes;  // per-iteration change statistic
  std::size_t fallbacks = 0;    // entries that fell back to the column median
};

struct IterationControl {
  std::size_t max_iters = 5;
  double tol = 1e-3;  // stop once the mean absolute change drops below
};

/// One Breiman update: each masked (j, h) becomes the proximity-weighted mean
/// of the observed values of column h. `current` is the complete working copy.
/// A zero weight sum falls back to `medians[h]` and increments `fallbacks`.
Dataset breiman_update(const Dataset& original, const Dataset& current,
                       const SquareMatrix& prox, std::span<const double> medians,
                       std::size_t& fallbacks);

/// One Ishioka update: proximity-weighted mean over the k rows i != j of
/// highest proximity (ties to the lower index), using current values.
Dataset ishioka_update(const Dataset& original, const Dataset& current,
                       const SquareMatrix& prox, std::size_t k,
                       std::span<const double> medians, std::size_t& fallbacks);

ImputationResult impute_breiman(const Dataset& data, const ForestParams& params,
                                IterationControl control = {});

ImputationResult impute_ishioka(const Dataset& data, const ForestParams& params,
                                std::size_t k = 10, IterationControl control = {});

/// Runs `step` from `initial` until the sum of squared successive differences
/// over the masked entries of `original` increases, returning the iterate
/// before the increase, or the last iterate after `max_iters` steps.
ImputationResult iterate_until_divergence(
    const Dataset& original, Dataset initial,
    const std::function<Dataset(const Dataset& current, std::size_t iteration)>& step,
    std::size_t max_iters);

/// Forest parameters rescaled for a fit on `rows` rows with `cols` features:
/// a_n keeps the ratio a_n / n of `base`, nodesize and q_n shrink if needed.
ForestParams rescale_params(const ForestParams& base, std::size_t base_rows,
                            std::size_t rows, std::size_t cols);

ImputationResult impute_missforest(const Dataset& data, const ForestParams& params,
                                   std::size_t max_iters = 10);

}  // namespace rfassign
