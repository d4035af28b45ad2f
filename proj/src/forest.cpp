#include "rfassign/forest.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <numeric>

#include "rfassign/errors.hpp"
#include "rfassign/numeric.hpp"

namespace rfassign {

ForestParams ForestParams::defaults(std::size_t n, std::size_t p) {
  ForestParams f;
  f.subsample_size = std::max<std::size_t>(1, default_subsample(n));
  f.tree = TreeParams::defaults(p);
  return f;
}

void ForestParams::validate(std::size_t n, std::size_t p) const {
  if (n_trees < 1) throw ConfigError("need at least one tree");
  if (subsample_size < 1 || subsample_size > n) {
    throw ConfigError("subsample size a_n=" + std::to_string(subsample_size) +
                      " must lie in 1.." + std::to_string(n));
  }
  if (tree.nodesize > subsample_size) {
    throw ConfigError("nodesize=" + std::to_string(tree.nodesize) +
                      " exceeds subsample size a_n=" + std::to_string(subsample_size));
  }
  tree.validate(p);
}

nlohmann::json ForestParams::to_json() const {
  return {{"trees", n_trees},
          {"subsample_size", subsample_size},
          {"mtry", tree.mtry},
          {"nodesize", tree.nodesize},
          {"qn", tree.min_leaf},
          {"seed", seed}};
}

ForestParams ForestParams::from_json(const nlohmann::json& j) {
  ForestParams f;
  f.n_trees = j.at("trees").get<std::size_t>();
  f.subsample_size = j.at("subsample_size").get<std::size_t>();
  f.tree.mtry = j.at("mtry").get<std::size_t>();
  f.tree.nodesize = j.at("nodesize").get<std::size_t>();
  f.tree.min_leaf = j.at("qn").get<std::size_t>();
  f.seed = j.at("seed").get<std::uint64_t>();
  return f;
}

std::pair<std::vector<std::size_t>, Tree> fit_tree_k(const Dataset& data,
                                                     const ForestParams& params,
                                                     const SplitFinder& finder, std::size_t k) {
  Rng rng = make_stream(params.seed, {k});
  const std::size_t n = data.rows();
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  for (std::size_t t = 0; t < params.subsample_size; ++t) {
    std::uniform_int_distribution<std::size_t> pick(t, n - 1);
    std::swap(rows[t], rows[pick(rng)]);
  }
  rows.resize(params.subsample_size);
  std::sort(rows.begin(), rows.end());
  Tree tree = grow_tree(data, rows, params.tree, rng, finder);
  return {std::move(rows), std::move(tree)};
}

namespace {

Forest prepare(const Dataset& data, const ForestParams& params, std::string splitter) {
  if (data.empty()) throw ConfigError("cannot fit a forest on an empty dataset");
  params.validate(data.rows(), data.cols());
  Forest f;
  f.trees.resize(params.n_trees);
  f.subsamples.resize(params.n_trees);
  f.params = params;
  f.splitter = std::move(splitter);
  f.dims = data.cols();
  return f;
}

void check_dims(const Forest& forest, std::size_t cols) {
  if (cols != forest.dims) {
    throw InvalidInput("forest expects " + std::to_string(forest.dims) +
                       " features, got " + std::to_string(cols));
  }
}

std::vector<std::size_t> terminal_ids(const Forest& forest, const Dataset& data,
                                      bool parallel) {
  const std::size_t n = data.rows();
  const std::size_t m = forest.size();
  std::vector<std::size_t> ids(m * n);
  const auto trees = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t t = 0; t < trees; ++t) {
    const Tree& tree = forest.trees[static_cast<std::size_t>(t)];
    for (std::size_t i = 0; i < n; ++i) {
      ids[static_cast<std::size_t>(t) * n + i] = tree.terminal_node(data.row(i));
    }
  }
  return ids;
}

SquareMatrix proximity_impl(const Forest& forest, const Dataset& data, bool parallel) {
  check_dims(forest, data.cols());
  const std::size_t n = data.rows();
  const std::size_t m = forest.size();
  const auto ids = terminal_ids(forest, data, parallel);
  SquareMatrix k(n, 0.0);
  const double inv = 1.0 / static_cast<double>(m);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::ptrdiff_t si = 0; si < rows; ++si) {
    const auto i = static_cast<std::size_t>(si);
    k(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      std::size_t shared = 0;
      for (std::size_t t = 0; t < m; ++t) shared += ids[t * n + i] == ids[t * n + j] ? 1 : 0;
      const double v = static_cast<double>(shared) * inv;
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

std::vector<double> predict_rows_impl(const Forest& forest, const Dataset& data,
                                      PredictMode mode, std::uint64_t seed, bool parallel) {
  check_dims(forest, data.cols());
  std::vector<double> out(data.rows());
  const auto rows = static_cast<std::ptrdiff_t>(data.rows());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t si = 0; si < rows; ++si) {
    const auto i = static_cast<std::size_t>(si);
    Rng rng = make_stream(seed, {i});
    out[i] = predict_forest(forest, data.row(i), mode, &rng);
  }
  return out;
}

}  // namespace

Forest fit_forest(const Dataset& data, const ForestParams& params, const SplitFinder& finder,
                  std::string splitter) {
  Forest f = prepare(data, params, std::move(splitter));
  const auto trees = static_cast<std::ptrdiff_t>(params.n_trees);
  // Exceptions must not cross the parallel region.
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < trees; ++k) {
    try {
      auto [rows, tree] = fit_tree_k(data, params, finder, static_cast<std::size_t>(k));
      f.subsamples[static_cast<std::size_t>(k)] = std::move(rows);
      f.trees[static_cast<std::size_t>(k)] = std::move(tree);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return f;
}

double predict_forest(const Forest& forest, PointView x, PredictMode mode, Rng* rng) {
  check_dims(forest, x.size());
  if (forest.trees.empty()) throw InvalidInput("predict: empty forest");
  std::vector<double> per_tree(forest.size());
  for (std::size_t k = 0; k < forest.size(); ++k) {
    per_tree[k] = forest.trees[k].predict(x, mode, rng);
  }
  return pairwise_sum(per_tree) / static_cast<double>(per_tree.size());
}

std::vector<double> predict_rows(const Forest& forest, const Dataset& data, PredictMode mode,
                                 std::uint64_t seed) {
  return predict_rows_impl(forest, data, mode, seed, true);
}

SquareMatrix proximity(const Forest& forest, const Dataset& data) {
  return proximity_impl(forest, data, true);
}

namespace serial {

Forest fit_forest(const Dataset& data, const ForestParams& params, const SplitFinder& finder,
                  std::string splitter) {
  Forest f = prepare(data, params, std::move(splitter));
  for (std::size_t k = 0; k < params.n_trees; ++k) {
    auto [rows, tree] = fit_tree_k(data, params, finder, k);
    f.subsamples[k] = std::move(rows);
    f.trees[k] = std::move(tree);
  }
  return f;
}

std::vector<double> predict_rows(const Forest& forest, const Dataset& data, PredictMode mode,
                                 std::uint64_t seed) {
  return predict_rows_impl(forest, data, mode, seed, false);
}

SquareMatrix proximity(const Forest& forest, const Dataset& data) {
  return proximity_impl(forest, data, false);
}

}  // namespace serial

nlohmann::json forest_to_json(const Forest& forest) {
  nlohmann::json trees = nlohmann::json::array();
  for (std::size_t k = 0; k < forest.size(); ++k) {
    nlohmann::json t = forest.trees[k].to_json();
    t["subsample"] = forest.subsamples[k];
    trees.push_back(std::move(t));
  }
  return {{"params", forest.params.to_json()},
          {"splitter", forest.splitter},
          {"dims", forest.dims},
          {"trees", std::move(trees)}};
}

Forest forest_from_json(const nlohmann::json& j) {
  try {
    Forest f;
    f.params = ForestParams::from_json(j.at("params"));
    f.splitter = j.at("splitter").get<std::string>();
    f.dims = j.at("dims").get<std::size_t>();
    for (const auto& t : j.at("trees")) {
      f.trees.push_back(Tree::from_json(t));
      f.subsamples.push_back(t.at("subsample").get<std::vector<std::size_t>>());
      if (f.trees.back().dims() != f.dims) throw InvalidInput("forest json: tree dimension mismatch");
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("forest json: ") + e.what());
  }
}

void save_forest(const Forest& forest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << forest_to_json(forest).dump() << '\n';
}

Forest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("forest json: ") + e.what());
  }
  return forest_from_json(j);
}

}  // namespace rfassign
