#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rfassign/data.hpp"
#include "rfassign/rng.hpp"
#include "rfassign/split.hpp"

namespace rfassign {

/// How an internal node sends a point whose split coordinate is missing.
enum class MissingRoute : std::uint8_t {
  Probabilistic,         // left with probability p_left
  NoMissing,             // never saw a missing value: stop and use the node estimate
  MiaMissingLeft,        // {x <= z or missing} vs {x > z}
  MiaMissingRight,       // {x <= z} vs {x > z or missing}
  MiaObservedVsMissing,  // {observed} vs {missing}, threshold unused
};

std::string_view to_string(MissingRoute route) noexcept;
MissingRoute missing_route_from_string(std::string_view name);

struct TreeNode {
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  double estimate = 0.0;  // mean response of the node's members
  std::size_t count = 0;
  std::size_t left = kNone;
  std::size_t right = kNone;
  std::size_t direction = 0;
  double threshold = 0.0;
  MissingRoute route = MissingRoute::NoMissing;
  double p_left = 0.0;  // meaningful only for Probabilistic

  bool is_leaf() const noexcept { return left == kNone; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeParams {
  std::size_t mtry = 1;
  std::size_t nodesize = 5;
  std::size_t min_leaf = 3;  // q_n

  /// mtry = max(1, floor(p/3)), nodesize = 5, q_n = ceil((nodesize+1)/2).
  static TreeParams defaults(std::size_t p);
  static std::size_t default_min_leaf(std::size_t nodesize) noexcept {
    return (nodesize + 2) / 2;
  }

  /// Throws ConfigError unless 1 <= mtry <= p, q_n >= 1 and 2 q_n - 1 <= nodesize.
  void validate(std::size_t p) const;

  friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

enum class PredictMode : std::uint8_t { Fractional, Stochastic };

/// Flat binary tree; node 0 is the root, nodes are numbered breadth-first.
class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes, std::size_t dims);

  std::span<const TreeNode> nodes() const noexcept { return nodes_; }
  const TreeNode& node(std::size_t k) const { return nodes_.at(k); }
  std::size_t dims() const noexcept { return dims_; }
  std::size_t leaf_count() const noexcept;

  /// Stochastic mode draws one Bernoulli(p_left) from `rng` per probabilistic
  /// node visited with the split coordinate missing.
  double predict(PointView x, PredictMode mode, Rng* rng = nullptr) const;
  double predict(PointView x) const { return predict(x, PredictMode::Fractional); }

  /// Index of the node where a deterministic descent stops: a leaf, or an
  /// internal node that cannot route a missing coordinate. Probabilistic nodes
  /// send missing coordinates to the more likely child, ties to the left.
  std::size_t terminal_node(PointView x) const;

  nlohmann::json to_json() const;
  static Tree from_json(const nlohmann::json& j);

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  double predict_from(std::size_t k, PointView x, PredictMode mode, Rng* rng) const;

  std::vector<TreeNode> nodes_;
  std::size_t dims_ = 0;
};

/// A chosen split, ready to be recorded in the tree.
struct NodeSplit {
  std::size_t direction = 0;
  double threshold = 0.0;
  MissingRoute route = MissingRoute::NoMissing;
  double p_left = 0.0;
  Cell left;
  Cell right;
};

/// Split search strategy: returns the split of `cell` over the candidate
/// directions with both children holding >= q_n members, or nothing.
using SplitFinder = std::function<std::optional<NodeSplit>(
    const Cell& cell, const Dataset& data, std::span<const std::size_t> directions,
    std::size_t q_n)>;

/// Joint cut-and-assignation search (best_split + apply_split).
SplitFinder assignation_split_finder();

/// `mtry` distinct directions out of p, uniformly, returned in ascending order.
std::vector<std::size_t> draw_directions(Rng& rng, std::size_t p, std::size_t mtry);

/// Grows one tree on `rows` of `data`. Cells with q_n <= N <= nodesize become
/// leaves; larger cells are split by `finder` over freshly drawn directions, or
/// become leaves when no admissible split exists.
Tree grow_tree(const Dataset& data, std::span<const std::size_t> rows,
               const TreeParams& params, Rng& rng,
               const SplitFinder& finder = assignation_split_finder());

/// As grow_tree, also returning the final cells (members and interval
/// imputations) indexed by node; internal nodes get an empty cell.
Tree grow_tree_traced(const Dataset& data, std::span<const std::size_t> rows,
                      const TreeParams& params, Rng& rng, const SplitFinder& finder,
                      std::vector<Cell>& final_cells);

inline double predict_tree(const Tree& tree, PointView x, PredictMode mode,
                           Rng* rng = nullptr) {
  return tree.predict(x, mode, rng);
}

}  // namespace rfassign
