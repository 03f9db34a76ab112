#pragma once

#include <cstdint>

#include "threadtrack/env/tree.hpp"

namespace threadtrack::env {

inline constexpr std::size_t kDefaultOracleLeafLimit = 64;

// Best summed karma of the union of K root-to-leaf threads, each node counted
// once (the post included). Uses every thread when the tree has fewer than K
// leaves. Exhaustive over leaf subsets; throws ConfigError when the tree has
// more than `max_leaves` leaves.
std::int64_t oracle_upper_bound(const DiscussionTree& tree, int k,
                                std::size_t max_leaves = kDefaultOracleLeafLimit);

// Total reward of a policy that picks a uniformly random K-subset each step.
std::int64_t random_rollout(const DiscussionTree& tree, int n, int k, std::uint64_t seed);

}  // namespace threadtrack::env
