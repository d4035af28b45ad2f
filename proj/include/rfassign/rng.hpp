#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rfassign {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent seed from a master seed and a list of counters
/// (tree index, repetition, rate index, ...). The result depends only on the
/// values passed, never on how many streams were derived before.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> counters) noexcept;

inline Rng make_stream(std::uint64_t master,
                       std::initializer_list<std::uint64_t> counters) {
  return Rng(derive_seed(master, counters));
}

}  // namespace rfassign
