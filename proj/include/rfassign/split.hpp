#pragma once

// CART split search with joint assignation of missing entries.
//
// A cell carries, for each member, an interval imputation per direction:
// observed coordinates are degenerate intervals [x, x], missing ones start as
// [0, 1] and are narrowed to the side of every cut they get assigned to.
// Splitting a cell on direction h routes observed members by comparing to the
// threshold and routes the members missing in h by an assignation chosen to
// maximize the CART criterion together with the cut.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rfassign/data.hpp"

namespace rfassign {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(const Interval& other) const noexcept {
    return lo <= other.lo && other.hi <= hi;
  }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Hyperrectangular node region with its members and their interval imputations.
struct Cell {
  std::vector<Interval> bounds;       // p entries
  std::vector<std::size_t> members;   // dataset row indices
  std::vector<Interval> imputations;  // members.size() * p, row-major

  /// [0,1]^p with the given members; missing coordinates imputed as [0,1].
  static Cell root(const Dataset& data, std::span<const std::size_t> members);

  std::size_t size() const noexcept { return members.size(); }
  std::size_t dims() const noexcept { return bounds.size(); }
  const Interval& imputation(std::size_t member_pos, std::size_t h) const noexcept {
    return imputations[member_pos * bounds.size() + h];
  }

  /// Checks both cell invariants; throws InternalError on violation.
  void check_invariants(const Dataset& data) const;
};

struct Cut {
  std::size_t direction = 0;
  double threshold = 0.5;
  friend bool operator==(const Cut&, const Cut&) = default;
};

enum class Side : std::uint8_t { Left, Right };

/// Prefix assignation over the missing members sorted by ascending response:
/// the `prefix` smallest go to `smallest_to`, the rest to the other child.
/// Canonical form: all-right is {Left, 0}, all-left is {Left, N}; the Right
/// orientation is only used for 0 < prefix < N.
struct Assignation {
  Side smallest_to = Side::Left;
  std::size_t prefix = 0;
  std::size_t missing = 0;

  static Assignation canonical(Side smallest_to, std::size_t prefix, std::size_t missing);

  std::size_t left_count() const noexcept {
    return smallest_to == Side::Left ? prefix : missing - prefix;
  }
  /// Whether the member of the given rank in ascending-response order goes left.
  bool sends_left(std::size_t rank) const noexcept {
    return (rank < prefix) == (smallest_to == Side::Left);
  }
  /// The binary vector w in ascending-response order (1 = left).
  std::vector<std::uint8_t> expand() const;

  friend bool operator==(const Assignation&, const Assignation&) = default;
};

struct SplitDecision {
  Cut cut;
  Assignation assignation;
  /// Fraction of the missing-in-direction members sent left; empty when no
  /// member of the cell was missing in the cut direction.
  std::optional<double> p_left;
  double score = 0.0;
  std::size_t left_count = 0;
  std::size_t right_count = 0;

  double p_right() const noexcept { return p_left ? 1.0 - *p_left : 0.0; }
};

/// N_L N_R / N^2 (mean_L - mean_R)^2 from per-side counts and response sums;
/// zero when either side is empty.
double cart_from_sums(std::size_t n_left, double sum_left, std::size_t n_right,
                      double sum_right) noexcept;

/// Empirical CART criterion of a two-way partition of a cell's responses.
double cart_complete(std::span<const double> responses,
                     std::span<const std::uint8_t> left_membership);

/// Positions (into `cell.members`) of the members missing in direction h,
/// ordered by ascending response, ties by row index. Assignations refer to
/// this order.
std::vector<std::size_t> missing_by_response(const Cell& cell, const Dataset& data,
                                             std::size_t h);

/// Per-member side (1 = left) of the partition induced by (cut, assignation),
/// in the cell's member order.
std::vector<std::uint8_t> partition(const Cell& cell, const Dataset& data,
                                    const Cut& cut, const Assignation& assignation);

/// CART criterion in the presence of missing values for one (cut, assignation).
double cart_with_assignation(const Cell& cell, const Cut& cut,
                             const Assignation& assignation, const Dataset& data);

/// Every prefix assignation of the sorted responses, in both orientations,
/// deduplicated and ordered by left count (Left orientation first on ties).
std::vector<Assignation> admissible_assignations(std::span<const double> missing_responses);

/// Candidate thresholds in direction h in ascending order: midpoints between
/// consecutive distinct observed values, plus, when members are missing in h,
/// the cuts leaving every observed member on one side.
std::vector<double> candidate_thresholds(const Cell& cell, const Dataset& data,
                                         std::size_t h);

/// Best (cut, assignation) over the given directions subject to both children
/// holding at least q_n members. Ties go to the smallest direction, then the
/// smallest threshold, then the fewest missing members sent left.
std::optional<SplitDecision> best_split(const Cell& cell, const Dataset& data,
                                        std::span<const std::size_t> directions,
                                        std::size_t q_n);

/// Child cells of an accepted decision; assigned members get their imputation
/// in the cut direction narrowed to [a, z] or [z, b].
std::pair<Cell, Cell> apply_split(const Cell& cell, const Dataset& data,
                                  const SplitDecision& decision);

}  // namespace rfassign
