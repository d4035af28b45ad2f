#pragma once

#include <cstddef>
#include <span>

namespace rfassign {

/// Pairwise (cascade) summation; error grows as O(log n) instead of O(n).
double pairwise_sum(std::span<const double> values);

double mean(std::span<const double> values);

}  // namespace rfassign
