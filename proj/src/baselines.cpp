#include "rfassign/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rfassign/errors.hpp"
#include "rfassign/numeric.hpp"

namespace rfassign {

namespace {

constexpr double kTieRelTol = 1e-13;

Dataset complete_copy(const Dataset& src, std::vector<double> features) {
  std::optional<std::vector<double>> truth;
  if (src.has_truth()) truth.emplace(src.truth().begin(), src.truth().end());
  return Dataset(src.cols(), std::move(features),
                 std::vector<std::uint8_t>(src.rows() * src.cols(), 0),
                 std::vector<double>(src.response().begin(), src.response().end()),
                 std::move(truth));
}

/// Mean absolute change over the masked entries of `original`.
double mean_abs_change(const Dataset& original, const Dataset& a, const Dataset& b) {
  std::vector<double> diffs;
  for (std::size_t i = 0; i < original.rows(); ++i) {
    for (std::size_t h = 0; h < original.cols(); ++h) {
      if (original.is_missing(i, h)) diffs.push_back(std::abs(a.observed(i, h) - b.observed(i, h)));
    }
  }
  return mean(diffs);
}

}  // namespace

std::vector<double> column_medians(const Dataset& data) {
  std::vector<double> med(data.cols());
  std::vector<double> col;
  for (std::size_t h = 0; h < data.cols(); ++h) {
    col.clear();
    for (std::size_t i = 0; i < data.rows(); ++i) {
      if (!data.is_missing(i, h)) col.push_back(data.observed(i, h));
    }
    if (col.empty()) {
      if (data.rows() == 0) continue;
      throw ConfigError("column x" + std::to_string(h + 1) + " has no observed value");
    }
    const auto mid = col.begin() + static_cast<std::ptrdiff_t>((col.size() - 1) / 2);
    std::nth_element(col.begin(), mid, col.end());
    med[h] = *mid;
  }
  return med;
}

Dataset impute_median(const Dataset& data) {
  const auto med = column_medians(data);
  std::vector<double> features(data.raw_features().begin(), data.raw_features().end());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t h = 0; h < data.cols(); ++h) {
      if (data.is_missing(i, h)) features[i * data.cols() + h] = med[h];
    }
  }
  return complete_copy(data, std::move(features));
}

// ---------------------------------------------------------------------------
// MIA

std::vector<std::uint8_t> mia_partition(const Cell& cell, const Dataset& data,
                                        const MiaSplit& split) {
  const std::size_t h = split.direction;
  if (h >= cell.dims()) throw InvalidInput("MIA split direction out of range");
  if ((split.rule == MiaRule::ObservedVsMissing) == split.threshold.has_value()) {
    throw InvalidInput("MIA split: only the observed-vs-missing rule omits the threshold");
  }
  std::vector<std::uint8_t> left(cell.size());
  for (std::size_t k = 0; k < cell.size(); ++k) {
    const std::size_t i = cell.members[k];
    const bool miss = data.is_missing(i, h);
    switch (split.rule) {
      case MiaRule::MissingLeft:
        left[k] = miss || data.observed(i, h) <= *split.threshold;
        break;
      case MiaRule::MissingRight:
        left[k] = !miss && data.observed(i, h) <= *split.threshold;
        break;
      case MiaRule::ObservedVsMissing:
        left[k] = !miss;
        break;
    }
  }
  return left;
}

std::optional<MiaSplit> best_mia_split(const Cell& cell, const Dataset& data,
                                       std::span<const std::size_t> directions,
                                       std::size_t q_n) {
  const std::size_t n = cell.size();
  if (n == 0 || n < 2 * std::max<std::size_t>(q_n, 1)) return std::nullopt;

  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) y[k] = data.response(cell.members[k]);
  const double center = mean(y);

  std::vector<std::size_t> dirs(directions.begin(), directions.end());
  std::sort(dirs.begin(), dirs.end());
  dirs.erase(std::unique(dirs.begin(), dirs.end()), dirs.end());

  std::optional<MiaSplit> best;
  auto consider = [&](std::size_t h, MiaRule rule, std::optional<double> z, std::size_t n_left,
                      double left_sum, double total) {
    const std::size_t n_right = n - n_left;
    if (n_left < q_n || n_right < q_n) return;
    const double score = cart_from_sums(n_left, left_sum, n_right, total - left_sum);
    if (best && !(score > best->score + kTieRelTol * best->score)) return;
    best = MiaSplit{h, rule, z, score};
  };

  struct Obs {
    double x;
    double y;
    std::size_t row;
  };
  std::vector<Obs> obs;
  for (std::size_t h : dirs) {
    if (h >= cell.dims()) throw InvalidInput("candidate direction out of range");
    obs.clear();
    std::vector<double> miss_y;
    for (std::size_t i : cell.members) {
      if (data.is_missing(i, h)) {
        miss_y.push_back(data.response(i) - center);
      } else {
        obs.push_back({data.observed(i, h), data.response(i) - center, i});
      }
    }
    std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) {
      return a.x != b.x ? a.x < b.x : a.row < b.row;
    });
    const std::size_t n_miss = miss_y.size();
    double miss_sum = 0.0;
    for (double v : miss_y) miss_sum += v;
    std::vector<double> prefix(obs.size() + 1, 0.0);
    for (std::size_t j = 0; j < obs.size(); ++j) prefix[j + 1] = prefix[j] + obs[j].y;
    const double total = prefix[obs.size()] + miss_sum;

    const Interval& b = cell.bounds[h];
    for (std::size_t j = 1; j < obs.size(); ++j) {
      const double lo = obs[j - 1].x;
      const double hi = obs[j].x;
      if (!(lo < hi)) continue;
      const double z = 0.5 * (lo + hi);
      if (!(lo <= z && z < hi && b.lo < z && z < b.hi)) continue;
      consider(h, MiaRule::MissingLeft, z, j + n_miss, prefix[j] + miss_sum, total);
      consider(h, MiaRule::MissingRight, z, j, prefix[j], total);
    }
    if (!obs.empty() && n_miss > 0) {
      consider(h, MiaRule::ObservedVsMissing, std::nullopt, obs.size(), prefix[obs.size()], total);
    }
  }
  return best;
}

SplitFinder mia_split_finder() {
  return [](const Cell& cell, const Dataset& data, std::span<const std::size_t> directions,
            std::size_t q_n) -> std::optional<NodeSplit> {
    const auto split = best_mia_split(cell, data, directions, q_n);
    if (!split) return std::nullopt;
    const auto left = mia_partition(cell, data, *split);
    const std::size_t h = split->direction;
    const std::size_t p = cell.dims();

    NodeSplit s;
    s.direction = h;
    s.threshold = split->threshold.value_or(0.0);
    switch (split->rule) {
      case MiaRule::MissingLeft: s.route = MissingRoute::MiaMissingLeft; break;
      case MiaRule::MissingRight: s.route = MissingRoute::MiaMissingRight; break;
      case MiaRule::ObservedVsMissing: s.route = MissingRoute::MiaObservedVsMissing; break;
    }
    s.left.bounds = cell.bounds;
    s.right.bounds = cell.bounds;
    if (split->threshold) {
      s.left.bounds[h].hi = *split->threshold;
      s.right.bounds[h].lo = *split->threshold;
    }
    for (std::size_t k = 0; k < cell.size(); ++k) {
      Cell& child = left[k] ? s.left : s.right;
      const std::size_t i = cell.members[k];
      child.members.push_back(i);
      for (std::size_t g = 0; g < p; ++g) {
        Interval imp = cell.imputation(k, g);
        if (g == h && data.is_missing(i, h)) imp = child.bounds[h];
        child.imputations.push_back(imp);
      }
    }
    return s;
  };
}

Forest fit_mia_forest(const Dataset& data, const ForestParams& params) {
  return fit_forest(data, params, mia_split_finder(), "mia");
}

// ---------------------------------------------------------------------------
// Proximity imputation

Dataset breiman_update(const Dataset& original, const Dataset& current,
                       const SquareMatrix& prox, std::span<const double> medians,
                       std::size_t& fallbacks) {
  const std::size_t n = original.rows();
  const std::size_t p = original.cols();
  std::vector<double> next(current.raw_features().begin(), current.raw_features().end());
  std::vector<double> num;
  std::vector<double> den;
  for (std::size_t h = 0; h < p; ++h) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!original.is_missing(j, h)) continue;
      num.clear();
      den.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (original.is_missing(i, h)) continue;
        num.push_back(prox(i, j) * original.observed(i, h));
        den.push_back(prox(i, j));
      }
      const double w = pairwise_sum(den);
      if (w > 0.0) {
        next[j * p + h] = std::clamp(pairwise_sum(num) / w, 0.0, 1.0);
      } else {
        next[j * p + h] = medians[h];
        ++fallbacks;
      }
    }
  }
  return complete_copy(original, std::move(next));
}

Dataset ishioka_update(const Dataset& original, const Dataset& current,
                       const SquareMatrix& prox, std::size_t k,
                       std::span<const double> medians, std::size_t& fallbacks) {
  if (k < 1) throw ConfigError("Ishioka imputation needs k >= 1");
  const std::size_t n = original.rows();
  const std::size_t p = original.cols();
  std::vector<double> next(current.raw_features().begin(), current.raw_features().end());
  std::vector<std::size_t> order;
  std::vector<double> num;
  std::vector<double> den;
  for (std::size_t j = 0; j < n; ++j) {
    bool any_missing = false;
    for (std::size_t h = 0; h < p; ++h) any_missing = any_missing || original.is_missing(j, h);
    if (!any_missing) continue;

    order.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (i != j) order.push_back(i);
    }
    const std::size_t kk = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (prox(a, j) != prox(b, j)) return prox(a, j) > prox(b, j);
                        return a < b;
                      });
    for (std::size_t h = 0; h < p; ++h) {
      if (!original.is_missing(j, h)) continue;
      num.clear();
      den.clear();
      for (std::size_t r = 0; r < kk; ++r) {
        const std::size_t i = order[r];
        num.push_back(prox(i, j) * current.observed(i, h));
        den.push_back(prox(i, j));
      }
      const double w = pairwise_sum(den);
      if (w > 0.0) {
        next[j * p + h] = std::clamp(pairwise_sum(num) / w, 0.0, 1.0);
      } else {
        next[j * p + h] = medians[h];
        ++fallbacks;
      }
    }
  }
  return complete_copy(original, std::move(next));
}

namespace {

template <typename Update>
ImputationResult proximity_imputation(const Dataset& data, const ForestParams& params,
                                      IterationControl control, Update update) {
  const auto medians = column_medians(data);
  ImputationResult result{impute_median(data), 0, {}, 0};
  if (data.missing_count() == 0) {
    result.iterations = 1;
    result.changes.push_back(0.0);
    return result;
  }
  for (std::size_t t = 1; t <= control.max_iters; ++t) {
    ForestParams fp = params;
    fp.seed = derive_seed(params.seed, {0xb4e1, t});
    const Forest forest = fit_forest(result.data, fp);
    const SquareMatrix prox = proximity(forest, result.data);
    Dataset next = update(result.data, prox, medians, result.fallbacks);
    const double change = mean_abs_change(data, result.data, next);
    result.data = std::move(next);
    result.changes.push_back(change);
    result.iterations = t;
    if (change < control.tol) break;
  }
  return result;
}

}  // namespace

ImputationResult impute_breiman(const Dataset& data, const ForestParams& params,
                                IterationControl control) {
  return proximity_imputation(
      data, params, control,
      [&](const Dataset& current, const SquareMatrix& prox, std::span<const double> med,
          std::size_t& fallbacks) { return breiman_update(data, current, prox, med, fallbacks); });
}

ImputationResult impute_ishioka(const Dataset& data, const ForestParams& params, std::size_t k,
                                IterationControl control) {
  if (k < 1) throw ConfigError("Ishioka imputation needs k >= 1");
  return proximity_imputation(
      data, params, control,
      [&](const Dataset& current, const SquareMatrix& prox, std::span<const double> med,
          std::size_t& fallbacks) {
        return ishioka_update(data, current, prox, k, med, fallbacks);
      });
}

// ---------------------------------------------------------------------------
// missForest

ImputationResult iterate_until_divergence(
    const Dataset& original, Dataset initial,
    const std::function<Dataset(const Dataset& current, std::size_t iteration)>& step,
    std::size_t max_iters) {
  ImputationResult result{std::move(initial), 0, {}, 0};
  for (std::size_t t = 1; t <= max_iters; ++t) {
    Dataset next = step(result.data, t);
    std::vector<double> sq;
    for (std::size_t i = 0; i < original.rows(); ++i) {
      for (std::size_t h = 0; h < original.cols(); ++h) {
        if (!original.is_missing(i, h)) continue;
        const double d = next.observed(i, h) - result.data.observed(i, h);
        sq.push_back(d * d);
      }
    }
    const double diff = pairwise_sum(sq);
    if (!result.changes.empty() && diff > result.changes.back()) {
      result.changes.push_back(diff);
      return result;
    }
    result.changes.push_back(diff);
    result.data = std::move(next);
    result.iterations = t;
  }
  return result;
}

ForestParams rescale_params(const ForestParams& base, std::size_t base_rows, std::size_t rows,
                            std::size_t cols) {
  if (rows == 0) throw ConfigError("cannot fit a forest on zero rows");
  ForestParams fp = base;
  const double frac = base_rows > 0 ? static_cast<double>(base.subsample_size) /
                                          static_cast<double>(base_rows)
                                    : 1.0;
  fp.subsample_size = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(frac * static_cast<double>(rows) - 1e-9)), 1, rows);
  fp.tree.nodesize = std::min(fp.tree.nodesize, fp.subsample_size);
  fp.tree.min_leaf = std::min(fp.tree.min_leaf, (fp.tree.nodesize + 1) / 2);
  fp.tree.mtry = std::clamp<std::size_t>(fp.tree.mtry, 1, cols);
  return fp;
}

ImputationResult impute_missforest(const Dataset& data, const ForestParams& params,
                                   std::size_t max_iters) {
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  Dataset initial = impute_median(data);
  if (data.missing_count() == 0) {
    return ImputationResult{std::move(initial), 0, {}, 0};
  }

  std::vector<std::size_t> order;
  for (std::size_t h = 0; h < p; ++h) {
    if (data.missing_count(h) > 0) order.push_back(h);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data.missing_count(a) < data.missing_count(b);
  });

  // The response joins the predictors, min-max scaled into [0,1].
  const auto y = data.response();
  const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
  const double ymin = *ymin_it;
  const double span = *ymax_it - ymin;
  std::vector<double> y_scaled(n);
  for (std::size_t i = 0; i < n; ++i) {
    y_scaled[i] = span > 0.0 ? std::clamp((y[i] - ymin) / span, 0.0, 1.0) : 0.5;
  }

  auto step = [&](const Dataset& current, std::size_t iteration) {
    std::vector<double> x(current.raw_features().begin(), current.raw_features().end());
    for (std::size_t h : order) {
      std::vector<double> train_x;
      std::vector<double> train_y;
      for (std::size_t i = 0; i < n; ++i) {
        if (data.is_missing(i, h)) continue;
        for (std::size_t g = 0; g < p; ++g) {
          if (g != h) train_x.push_back(x[i * p + g]);
        }
        train_x.push_back(y_scaled[i]);
        train_y.push_back(x[i * p + h]);
      }
      const std::size_t rows = train_y.size();
      const Dataset train(p, std::move(train_x), std::vector<std::uint8_t>(rows * p, 0),
                          std::move(train_y));
      ForestParams fp = rescale_params(params, n, rows, p);
      fp.seed = derive_seed(params.seed, {0x3f0e, iteration, h});
      const Forest forest = fit_forest(train, fp);

      std::vector<double> query(p);
      const std::vector<std::uint8_t> observed(p, 0);
      for (std::size_t i = 0; i < n; ++i) {
        if (!data.is_missing(i, h)) continue;
        std::size_t c = 0;
        for (std::size_t g = 0; g < p; ++g) {
          if (g != h) query[c++] = x[i * p + g];
        }
        query[c] = y_scaled[i];
        x[i * p + h] = std::clamp(predict_forest(forest, PointView{query, observed}), 0.0, 1.0);
      }
    }
    return complete_copy(data, std::move(x));
  };

  return iterate_until_divergence(data, std::move(initial), step, max_iters);
}

}  // namespace rfassign
