#include "rfassign/split.hpp"

#include <algorithm>
#include <numeric>

#include "rfassign/errors.hpp"
#include "rfassign/numeric.hpp"

namespace rfassign {

namespace {

// Scores within this relative distance of the incumbent count as ties.
constexpr double kTieRelTol = 1e-13;

bool improves(double score, double incumbent) noexcept {
  return score > incumbent + kTieRelTol * incumbent;
}

}  // namespace

Cell Cell::root(const Dataset& data, std::span<const std::size_t> members) {
  const std::size_t p = data.cols();
  Cell cell;
  cell.bounds.assign(p, Interval{0.0, 1.0});
  cell.members.assign(members.begin(), members.end());
  cell.imputations.reserve(members.size() * p);
  for (std::size_t i : members) {
    for (std::size_t h = 0; h < p; ++h) {
      if (data.is_missing(i, h)) {
        cell.imputations.push_back({0.0, 1.0});
      } else {
        const double x = data.observed(i, h);
        cell.imputations.push_back({x, x});
      }
    }
  }
  return cell;
}

void Cell::check_invariants(const Dataset& data) const {
  const std::size_t p = dims();
  if (imputations.size() != members.size() * p) {
    throw InternalError("cell: imputation table does not match member count");
  }
  for (std::size_t pos = 0; pos < members.size(); ++pos) {
    const std::size_t i = members[pos];
    for (std::size_t h = 0; h < p; ++h) {
      const Interval& imp = imputation(pos, h);
      if (!data.is_missing(i, h)) {
        const double x = data.observed(i, h);
        if (x < bounds[h].lo || x > bounds[h].hi) {
          throw InternalError("cell: member " + std::to_string(i) +
                              " lies outside the cell in direction " + std::to_string(h));
        }
      } else if (!bounds[h].contains(imp)) {
        throw InternalError("cell: imputation of member " + std::to_string(i) +
                            " escapes the cell in direction " + std::to_string(h));
      }
    }
  }
}

Assignation Assignation::canonical(Side smallest_to, std::size_t prefix,
                                   std::size_t missing) {
  if (prefix > missing) throw InvalidInput("assignation prefix exceeds missing count");
  if (smallest_to == Side::Right && (prefix == 0 || prefix == missing)) {
    return {Side::Left, missing - prefix, missing};
  }
  return {smallest_to, prefix, missing};
}

std::vector<std::uint8_t> Assignation::expand() const {
  std::vector<std::uint8_t> w(missing);
  for (std::size_t r = 0; r < missing; ++r) w[r] = sends_left(r) ? 1 : 0;
  return w;
}

double cart_from_sums(std::size_t n_left, double sum_left, std::size_t n_right,
                      double sum_right) noexcept {
  if (n_left == 0 || n_right == 0) return 0.0;
  const double n = static_cast<double>(n_left + n_right);
  const double d = sum_left / static_cast<double>(n_left) -
                   sum_right / static_cast<double>(n_right);
  return (static_cast<double>(n_left) / n) * (static_cast<double>(n_right) / n) * d * d;
}

double cart_complete(std::span<const double> responses,
                     std::span<const std::uint8_t> left_membership) {
  if (responses.empty()) throw InvalidInput("cart_complete: empty cell");
  if (responses.size() != left_membership.size()) {
    throw InvalidInput("cart_complete: response and membership lengths differ");
  }
  std::vector<double> left;
  std::vector<double> right;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    (left_membership[i] ? left : right).push_back(responses[i]);
  }
  return cart_from_sums(left.size(), pairwise_sum(left), right.size(), pairwise_sum(right));
}

std::vector<std::size_t> missing_by_response(const Cell& cell, const Dataset& data,
                                             std::size_t h) {
  std::vector<std::size_t> pos;
  for (std::size_t k = 0; k < cell.members.size(); ++k) {
    if (data.is_missing(cell.members[k], h)) pos.push_back(k);
  }
  std::sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
    const double ya = data.response(cell.members[a]);
    const double yb = data.response(cell.members[b]);
    if (ya != yb) return ya < yb;
    return cell.members[a] < cell.members[b];
  });
  return pos;
}

std::vector<std::uint8_t> partition(const Cell& cell, const Dataset& data,
                                    const Cut& cut, const Assignation& assignation) {
  const std::size_t h = cut.direction;
  if (h >= cell.dims()) throw InvalidInput("cut direction out of range");
  const auto missing = missing_by_response(cell, data, h);
  if (assignation.missing != missing.size()) {
    throw InvalidInput("assignation covers " + std::to_string(assignation.missing) +
                       " members, cell has " + std::to_string(missing.size()) +
                       " missing in direction " + std::to_string(h));
  }
  std::vector<std::uint8_t> left(cell.size(), 0);
  for (std::size_t k = 0; k < cell.size(); ++k) {
    const std::size_t i = cell.members[k];
    if (!data.is_missing(i, h)) left[k] = data.observed(i, h) <= cut.threshold ? 1 : 0;
  }
  for (std::size_t r = 0; r < missing.size(); ++r) {
    left[missing[r]] = assignation.sends_left(r) ? 1 : 0;
  }
  return left;
}

double cart_with_assignation(const Cell& cell, const Cut& cut,
                             const Assignation& assignation, const Dataset& data) {
  if (cell.members.empty()) throw InvalidInput("cart_with_assignation: empty cell");
  cell.check_invariants(data);
  const auto left = partition(cell, data, cut, assignation);
  std::vector<double> y(cell.size());
  for (std::size_t k = 0; k < cell.size(); ++k) y[k] = data.response(cell.members[k]);
  return cart_complete(y, left);
}

std::vector<Assignation> admissible_assignations(std::span<const double> missing_responses) {
  const std::size_t n = missing_responses.size();
  std::vector<Assignation> out;
  out.reserve(2 * n + 1);
  for (std::size_t m = 0; m <= n; ++m) {
    out.push_back(Assignation::canonical(Side::Left, m, n));
    if (m > 0 && m < n) out.push_back(Assignation::canonical(Side::Right, n - m, n));
  }
  return out;
}

namespace {

struct ObservedPoint {
  double x;
  double y;
  std::size_t row;
};

struct ThresholdCandidate {
  std::size_t observed_left;
  double threshold;
};

std::vector<ThresholdCandidate> threshold_candidates(
    const Interval& bounds, std::span<const ObservedPoint> observed, std::size_t n_missing) {
  std::vector<ThresholdCandidate> out;
  auto admit = [&](std::size_t left, double z) {
    if (bounds.lo < z && z < bounds.hi) out.push_back({left, z});
  };
  if (observed.empty()) {
    admit(0, 0.5 * (bounds.lo + bounds.hi));
    return out;
  }
  if (n_missing > 0) {
    const double z = 0.5 * (bounds.lo + observed.front().x);
    if (z < observed.front().x) admit(0, z);
  }
  for (std::size_t j = 1; j < observed.size(); ++j) {
    const double lo = observed[j - 1].x;
    const double hi = observed[j].x;
    if (!(lo < hi)) continue;
    const double z = 0.5 * (lo + hi);
    if (lo <= z && z < hi) admit(j, z);
  }
  if (n_missing > 0) {
    const double z = 0.5 * (observed.back().x + bounds.hi);
    if (z >= observed.back().x) admit(observed.size(), z);
  }
  return out;
}

std::vector<ObservedPoint> observed_sorted(const Cell& cell, const Dataset& data,
                                           std::size_t h, double center) {
  std::vector<ObservedPoint> obs;
  for (std::size_t i : cell.members) {
    if (!data.is_missing(i, h)) obs.push_back({data.observed(i, h), data.response(i) - center, i});
  }
  std::sort(obs.begin(), obs.end(), [](const ObservedPoint& a, const ObservedPoint& b) {
    if (a.x != b.x) return a.x < b.x;
    return a.row < b.row;
  });
  return obs;
}

}  // namespace

std::vector<double> candidate_thresholds(const Cell& cell, const Dataset& data,
                                         std::size_t h) {
  const auto obs = observed_sorted(cell, data, h, 0.0);
  const std::size_t n_missing = cell.size() - obs.size();
  std::vector<double> z;
  for (const auto& c : threshold_candidates(cell.bounds[h], obs, n_missing)) {
    z.push_back(c.threshold);
  }
  return z;
}

std::optional<SplitDecision> best_split(const Cell& cell, const Dataset& data,
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

  std::optional<SplitDecision> best;
  std::vector<double> obs_prefix;
  std::vector<double> miss_prefix;

  for (std::size_t h : dirs) {
    if (h >= cell.dims()) throw InvalidInput("candidate direction out of range");
    const auto obs = observed_sorted(cell, data, h, center);
    const auto missing = missing_by_response(cell, data, h);
    const std::size_t n_obs = obs.size();
    const std::size_t n_miss = missing.size();

    obs_prefix.assign(n_obs + 1, 0.0);
    for (std::size_t j = 0; j < n_obs; ++j) obs_prefix[j + 1] = obs_prefix[j] + obs[j].y;
    miss_prefix.assign(n_miss + 1, 0.0);
    for (std::size_t r = 0; r < n_miss; ++r) {
      miss_prefix[r + 1] = miss_prefix[r] + (data.response(cell.members[missing[r]]) - center);
    }
    const double total = obs_prefix[n_obs] + miss_prefix[n_miss];

    for (const auto& cand : threshold_candidates(cell.bounds[h], obs, n_miss)) {
      const std::size_t obs_left = cand.observed_left;
      const double obs_left_sum = obs_prefix[obs_left];

      auto consider = [&](const Assignation& a) {
        const std::size_t n_left = obs_left + a.left_count();
        const std::size_t n_right = n - n_left;
        if (n_left < q_n || n_right < q_n) return;
        const double miss_left_sum =
            a.smallest_to == Side::Left ? miss_prefix[a.prefix]
                                        : miss_prefix[n_miss] - miss_prefix[a.prefix];
        const double left_sum = obs_left_sum + miss_left_sum;
        const double score = cart_from_sums(n_left, left_sum, n_right, total - left_sum);
        if (best && !improves(score, best->score)) return;
        SplitDecision d;
        d.cut = {h, cand.threshold};
        d.assignation = a;
        if (n_miss > 0) {
          d.p_left = static_cast<double>(a.left_count()) / static_cast<double>(n_miss);
        }
        d.score = score;
        d.left_count = n_left;
        d.right_count = n_right;
        best = d;
      };

      for (std::size_t m = 0; m <= n_miss; ++m) {
        consider(Assignation::canonical(Side::Left, m, n_miss));
        if (m > 0 && m < n_miss) consider(Assignation::canonical(Side::Right, n_miss - m, n_miss));
      }
    }
  }
  return best;
}

std::pair<Cell, Cell> apply_split(const Cell& cell, const Dataset& data,
                                  const SplitDecision& decision) {
  const std::size_t p = cell.dims();
  const std::size_t h = decision.cut.direction;
  const double z = decision.cut.threshold;
  const auto left = partition(cell, data, decision.cut, decision.assignation);

  Cell children[2];
  for (auto& c : children) c.bounds = cell.bounds;
  children[0].bounds[h].hi = z;
  children[1].bounds[h].lo = z;

  for (std::size_t k = 0; k < cell.size(); ++k) {
    Cell& child = left[k] ? children[0] : children[1];
    const std::size_t i = cell.members[k];
    child.members.push_back(i);
    for (std::size_t g = 0; g < p; ++g) {
      Interval imp = cell.imputation(k, g);
      if (g == h && data.is_missing(i, h)) imp = child.bounds[h];
      child.imputations.push_back(imp);
    }
  }
  return {std::move(children[0]), std::move(children[1])};
}

}  // namespace rfassign
