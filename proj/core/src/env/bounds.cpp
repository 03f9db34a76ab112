#include "threadtrack/env/bounds.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>

#include "threadtrack/env/episode.hpp"
#include "threadtrack/error.hpp"
#include "threadtrack/random.hpp"

namespace threadtrack::env {
namespace {

using Bits = std::vector<std::uint64_t>;

Bits path_bits(const DiscussionTree& tree, int leaf) {
  Bits bits((tree.size() + 63) / 64, 0);
  for (int node : tree.path_to(leaf)) {
    bits[static_cast<std::size_t>(node) / 64] |= 1ULL << (static_cast<std::size_t>(node) % 64);
  }
  return bits;
}

}  // namespace

std::int64_t oracle_upper_bound(const DiscussionTree& tree, int k, std::size_t max_leaves) {
  if (k <= 0) throw ConfigError("oracle: K must be positive");
  const std::vector<int> leaves = tree.leaves();
  if (leaves.size() > max_leaves) {
    throw ConfigError("oracle: tree has " + std::to_string(leaves.size()) +
                      " leaves, above the limit of " + std::to_string(max_leaves));
  }
  const int pick = std::min<int>(k, static_cast<int>(leaves.size()));
  std::vector<Bits> paths;
  paths.reserve(leaves.size());
  for (int leaf : leaves) paths.push_back(path_bits(tree, leaf));

  const std::size_t words = paths.front().size();
  std::int64_t best = std::numeric_limits<std::int64_t>::min();
  std::vector<int> choice(static_cast<std::size_t>(pick));
  std::iota(choice.begin(), choice.end(), 0);
  const int total = static_cast<int>(leaves.size());
  Bits acc(words);
  while (true) {
    std::fill(acc.begin(), acc.end(), 0);
    for (int c : choice) {
      for (std::size_t w = 0; w < words; ++w) acc[w] |= paths[static_cast<std::size_t>(c)][w];
    }
    std::int64_t sum = 0;
    for (std::size_t w = 0; w < words; ++w) {
      for (std::uint64_t bits = acc[w]; bits; bits &= bits - 1) {
        const auto node = static_cast<int>(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
        sum += tree.node(node).karma;
      }
    }
    best = std::max(best, sum);
    // Next combination in lexicographic order.
    int i = pick - 1;
    while (i >= 0 && choice[static_cast<std::size_t>(i)] == total - pick + i) --i;
    if (i < 0) break;
    ++choice[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < pick; ++j) {
      choice[static_cast<std::size_t>(j)] = choice[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return best;
}

std::int64_t random_rollout(const DiscussionTree& tree, int n, int k, std::uint64_t seed) {
  Rng rng(seed);
  auto [state, outcome] = reset(tree, n, k);
  std::int64_t total = 0;
  while (!outcome.terminal) {
    const auto pick = sample_subset(rng, static_cast<int>(state.candidates().size()), k);
    std::vector<int> action;
    action.reserve(pick.size());
    for (int p : pick) action.push_back(state.candidates()[static_cast<std::size_t>(p)]);
    outcome = step_nodes(state, action);
    total += outcome.reward;
  }
  return total;
}

}  // namespace threadtrack::env
