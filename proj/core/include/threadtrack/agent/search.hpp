#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "threadtrack/random.hpp"

namespace threadtrack::agent {

// A K-subset of candidate positions (ascending) and its summed sub-action
// value. The sum is taken in ascending position order.
struct ScoredAction {
  std::vector<int> members;
  double value = 0.0;

  friend bool operator==(const ScoredAction&, const ScoredAction&) = default;
};

std::uint64_t binomial(int n, int k);

// All K-subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<int>> all_subsets(int n, int k);

double subset_sum(std::span<const double> q, std::span<const int> members);

// The m subsets with the largest sum, by value descending and then
// lexicographically. Enumerates all C(N, K) sums and partially sorts them.
// Throws ConfigError unless 1 <= K <= N.
std::vector<ScoredAction> top_m_actions(std::span<const double> q, int k, std::size_t m);

// Same result from a lazy best-first frontier over subsets of value-ranked
// positions; touches O(m K) subsets instead of C(N, K). Ties are resolved like
// top_m_actions as long as subset sums are monotone under member swaps, which
// holds exactly for integer-valued or otherwise exactly summable inputs.
std::vector<ScoredAction> top_m_best_first(std::span<const double> q, int k, std::size_t m);

// m distinct K-subsets drawn uniformly without replacement from all C(N, K),
// each ascending, in draw order. Returns every subset when m >= C(N, K).
std::vector<std::vector<int>> random_subsample_candidates(int n, int k, std::size_t m, Rng& rng);

struct Selection {
  std::size_t index = 0;
  bool explored = false;
};

// Epsilon-greedy over a candidate list: argmax (first on ties) with
// probability 1 - epsilon, else uniform.
Selection select_action(std::span<const double> values, double epsilon, Rng& rng);

// r + gamma * max(next_values), or r when terminal. Throws ConfigError on an
// empty list for a non-terminal transition.
double td_target(double reward, std::span<const double> next_values, double gamma, bool terminal);

}  // namespace threadtrack::agent
