#include "rfassign/tree.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include "rfassign/errors.hpp"
#include "rfassign/numeric.hpp"

namespace rfassign {

std::string_view to_string(MissingRoute route) noexcept {
  switch (route) {
    case MissingRoute::Probabilistic: return "probabilistic";
    case MissingRoute::NoMissing: return "none";
    case MissingRoute::MiaMissingLeft: return "mia_missing_left";
    case MissingRoute::MiaMissingRight: return "mia_missing_right";
    case MissingRoute::MiaObservedVsMissing: return "mia_observed_vs_missing";
  }
  return "none";
}

MissingRoute missing_route_from_string(std::string_view name) {
  for (auto r : {MissingRoute::Probabilistic, MissingRoute::NoMissing,
                 MissingRoute::MiaMissingLeft, MissingRoute::MiaMissingRight,
                 MissingRoute::MiaObservedVsMissing}) {
    if (to_string(r) == name) return r;
  }
  throw InvalidInput("unknown missing route '" + std::string(name) + "'");
}

TreeParams TreeParams::defaults(std::size_t p) {
  TreeParams t;
  t.mtry = std::max<std::size_t>(1, p / 3);
  t.nodesize = 5;
  t.min_leaf = default_min_leaf(t.nodesize);
  return t;
}

void TreeParams::validate(std::size_t p) const {
  if (mtry < 1 || mtry > p) {
    throw ConfigError("mtry must lie in 1.." + std::to_string(p) + ", got " +
                      std::to_string(mtry));
  }
  if (min_leaf < 1) throw ConfigError("q_n must be at least 1");
  if (2 * min_leaf - 1 > nodesize) {
    throw ConfigError("need 2*q_n - 1 <= nodesize (q_n=" + std::to_string(min_leaf) +
                      ", nodesize=" + std::to_string(nodesize) + ")");
  }
}

Tree::Tree(std::vector<TreeNode> nodes, std::size_t dims)
    : nodes_(std::move(nodes)), dims_(dims) {
  if (nodes_.empty()) throw InvalidInput("tree: no nodes");
  for (const auto& nd : nodes_) {
    if ((nd.left == TreeNode::kNone) != (nd.right == TreeNode::kNone) ||
        (!nd.is_leaf() && (nd.left >= nodes_.size() || nd.right >= nodes_.size() ||
                           nd.direction >= dims_))) {
      throw InvalidInput("tree: malformed node");
    }
  }
}

std::size_t Tree::leaf_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

double Tree::predict(PointView x, PredictMode mode, Rng* rng) const {
  if (x.values.size() != dims_ || x.missing.size() != dims_) {
    throw InvalidInput("predict: point has " + std::to_string(x.values.size()) +
                       " coordinates, tree expects " + std::to_string(dims_));
  }
  if (mode == PredictMode::Stochastic && rng == nullptr) {
    throw InvalidInput("predict: stochastic mode needs a random stream");
  }
  return predict_from(0, x, mode, rng);
}

double Tree::predict_from(std::size_t k, PointView x, PredictMode mode, Rng* rng) const {
  while (true) {
    const TreeNode& nd = nodes_[k];
    if (nd.is_leaf()) return nd.estimate;
    const std::size_t h = nd.direction;
    if (!x.is_missing(h)) {
      if (nd.route == MissingRoute::MiaObservedVsMissing) {
        k = nd.left;
      } else {
        k = x.values[h] <= nd.threshold ? nd.left : nd.right;
      }
      continue;
    }
    switch (nd.route) {
      case MissingRoute::NoMissing:
        return nd.estimate;
      case MissingRoute::MiaMissingLeft:
        k = nd.left;
        break;
      case MissingRoute::MiaMissingRight:
      case MissingRoute::MiaObservedVsMissing:
        k = nd.right;
        break;
      case MissingRoute::Probabilistic:
        if (mode == PredictMode::Stochastic) {
          std::bernoulli_distribution go_left(nd.p_left);
          k = go_left(*rng) ? nd.left : nd.right;
          break;
        }
        if (nd.p_left >= 1.0) {
          k = nd.left;
          break;
        }
        if (nd.p_left <= 0.0) {
          k = nd.right;
          break;
        }
        return nd.p_left * predict_from(nd.left, x, mode, rng) +
               (1.0 - nd.p_left) * predict_from(nd.right, x, mode, rng);
    }
  }
}

std::size_t Tree::terminal_node(PointView x) const {
  std::size_t k = 0;
  while (true) {
    const TreeNode& nd = nodes_[k];
    if (nd.is_leaf()) return k;
    const std::size_t h = nd.direction;
    if (!x.is_missing(h)) {
      if (nd.route == MissingRoute::MiaObservedVsMissing) {
        k = nd.left;
      } else {
        k = x.values[h] <= nd.threshold ? nd.left : nd.right;
      }
      continue;
    }
    switch (nd.route) {
      case MissingRoute::NoMissing: return k;
      case MissingRoute::MiaMissingLeft: k = nd.left; break;
      case MissingRoute::MiaMissingRight:
      case MissingRoute::MiaObservedVsMissing: k = nd.right; break;
      case MissingRoute::Probabilistic: k = nd.p_left >= 0.5 ? nd.left : nd.right; break;
    }
  }
}

namespace {

nlohmann::json node_to_json(std::span<const TreeNode> nodes, std::size_t k) {
  const TreeNode& nd = nodes[k];
  nlohmann::json j;
  if (nd.is_leaf()) {
    j["kind"] = "leaf";
    j["estimate"] = nd.estimate;
    j["count"] = nd.count;
    return j;
  }
  j["kind"] = "split";
  j["feature"] = nd.direction;
  j["threshold"] = nd.threshold;
  j["missing"] = std::string(to_string(nd.route));
  j["p_left"] = nd.route == MissingRoute::Probabilistic ? nlohmann::json(nd.p_left)
                                                        : nlohmann::json(nullptr);
  j["estimate"] = nd.estimate;
  j["count"] = nd.count;
  j["left"] = node_to_json(nodes, nd.left);
  j["right"] = node_to_json(nodes, nd.right);
  return j;
}

}  // namespace

nlohmann::json Tree::to_json() const {
  nlohmann::json j;
  j["dims"] = dims_;
  j["root"] = node_to_json(nodes_, 0);
  return j;
}

Tree Tree::from_json(const nlohmann::json& j) {
  try {
    const std::size_t dims = j.at("dims").get<std::size_t>();
    std::vector<TreeNode> nodes;
    std::deque<std::pair<const nlohmann::json*, std::size_t>> queue;
    nodes.emplace_back();
    queue.emplace_back(&j.at("root"), 0);
    while (!queue.empty()) {
      auto [src, k] = queue.front();
      queue.pop_front();
      TreeNode nd;
      nd.estimate = src->at("estimate").get<double>();
      nd.count = src->at("count").get<std::size_t>();
      const auto kind = src->at("kind").get<std::string>();
      if (kind == "split") {
        nd.direction = src->at("feature").get<std::size_t>();
        nd.threshold = src->at("threshold").get<double>();
        nd.route = missing_route_from_string(src->at("missing").get<std::string>());
        if (nd.route == MissingRoute::Probabilistic) nd.p_left = src->at("p_left").get<double>();
        nd.left = nodes.size();
        nd.right = nodes.size() + 1;
        nodes.emplace_back();
        nodes.emplace_back();
        queue.emplace_back(&src->at("left"), nd.left);
        queue.emplace_back(&src->at("right"), nd.right);
      } else if (kind != "leaf") {
        throw InvalidInput("tree json: unknown node kind '" + kind + "'");
      }
      nodes[k] = nd;
    }
    return Tree(std::move(nodes), dims);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("tree json: ") + e.what());
  }
}

SplitFinder assignation_split_finder() {
  return [](const Cell& cell, const Dataset& data, std::span<const std::size_t> directions,
            std::size_t q_n) -> std::optional<NodeSplit> {
    const auto decision = best_split(cell, data, directions, q_n);
    if (!decision) return std::nullopt;
    auto [left, right] = apply_split(cell, data, *decision);
    NodeSplit s;
    s.direction = decision->cut.direction;
    s.threshold = decision->cut.threshold;
    s.route = decision->p_left ? MissingRoute::Probabilistic : MissingRoute::NoMissing;
    s.p_left = decision->p_left.value_or(0.0);
    s.left = std::move(left);
    s.right = std::move(right);
    return s;
  };
}

std::vector<std::size_t> draw_directions(Rng& rng, std::size_t p, std::size_t mtry) {
  std::vector<std::size_t> dirs(p);
  std::iota(dirs.begin(), dirs.end(), std::size_t{0});
  for (std::size_t k = 0; k < mtry && k + 1 < p; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, p - 1);
    std::swap(dirs[k], dirs[pick(rng)]);
  }
  dirs.resize(mtry);
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

namespace {

Tree grow(const Dataset& data, std::span<const std::size_t> rows, const TreeParams& params,
          Rng& rng, const SplitFinder& finder, std::vector<Cell>* final_cells) {
  const std::size_t p = data.cols();
  params.validate(p);
  if (rows.empty() || rows.size() < params.min_leaf) {
    throw ConfigError("subsample of " + std::to_string(rows.size()) +
                      " rows is smaller than q_n=" + std::to_string(params.min_leaf));
  }

  std::vector<TreeNode> nodes(1);
  std::deque<std::pair<Cell, std::size_t>> active;
  active.emplace_back(Cell::root(data, rows), 0);
  if (final_cells) final_cells->clear();

  std::vector<double> y;
  while (!active.empty()) {
    auto [cell, k] = std::move(active.front());
    active.pop_front();

    const std::size_t count = cell.size();
    y.resize(count);
    for (std::size_t m = 0; m < count; ++m) y[m] = data.response(cell.members[m]);
    nodes[k].estimate = mean(y);
    nodes[k].count = count;

    std::optional<NodeSplit> split;
    if (count > params.nodesize) {
      const auto dirs = draw_directions(rng, p, params.mtry);
      split = finder(cell, data, dirs, params.min_leaf);
    }
    if (!split) {
      if (final_cells) {
        if (final_cells->size() <= k) final_cells->resize(k + 1);
        (*final_cells)[k] = std::move(cell);
      }
      continue;
    }

    TreeNode& nd = nodes[k];
    nd.direction = split->direction;
    nd.threshold = split->threshold;
    nd.route = split->route;
    nd.p_left = split->p_left;
    nd.left = nodes.size();
    nd.right = nodes.size() + 1;
    nodes.resize(nodes.size() + 2);
    active.emplace_back(std::move(split->left), nodes[k].left);
    active.emplace_back(std::move(split->right), nodes[k].right);
  }
  if (final_cells) final_cells->resize(nodes.size());
  return Tree(std::move(nodes), p);
}

}  // namespace

Tree grow_tree(const Dataset& data, std::span<const std::size_t> rows,
               const TreeParams& params, Rng& rng, const SplitFinder& finder) {
  return grow(data, rows, params, rng, finder, nullptr);
}

Tree grow_tree_traced(const Dataset& data, std::span<const std::size_t> rows,
                      const TreeParams& params, Rng& rng, const SplitFinder& finder,
                      std::vector<Cell>& final_cells) {
  return grow(data, rows, params, rng, finder, &final_cells);
}

}  // namespace rfassign
