#include "threadtrack/agent/search.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>

#include "threadtrack/error.hpp"

namespace threadtrack::agent {
namespace {

void check_nk(std::size_t n, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw ConfigError("subset search needs 1 <= K <= N (K=" + std::to_string(k) +
                      ", N=" + std::to_string(n) + ")");
  }
}

bool better(const ScoredAction& a, const ScoredAction& b) {
  if (a.value != b.value) return a.value > b.value;
  return a.members < b.members;
}

}  // namespace

std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

std::vector<std::vector<int>> all_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  if (k < 0 || k > n) return out;
  out.reserve(binomial(n, k));
  std::vector<int> s(k);
  std::iota(s.begin(), s.end(), 0);
  while (true) {
    out.push_back(s);
    int i = k - 1;
    while (i >= 0 && s[i] == n - k + i) --i;
    if (i < 0) break;
    ++s[i];
    for (int j = i + 1; j < k; ++j) s[j] = s[j - 1] + 1;
  }
  return out;
}

double subset_sum(std::span<const double> q, std::span<const int> members) {
  double v = 0.0;
  for (int i : members) v += q[static_cast<std::size_t>(i)];
  return v;
}

std::vector<ScoredAction> top_m_actions(std::span<const double> q, int k, std::size_t m) {
  check_nk(q.size(), k);
  const int n = static_cast<int>(q.size());
  std::vector<ScoredAction> all;
  for (auto& s : all_subsets(n, k)) {
    const double v = subset_sum(q, s);
    all.push_back({std::move(s), v});
  }
  const std::size_t keep = std::min(m, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
  all.resize(keep);
  return all;
}

std::vector<ScoredAction> top_m_best_first(std::span<const double> q, int k, std::size_t m) {
  check_nk(q.size(), k);
  const int n = static_cast<int>(q.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return q[a] > q[b]; });

  struct Node {
    ScoredAction action;
    std::vector<int> ranks;
  };
  auto make = [&](std::vector<int> ranks) {
    Node nd;
    nd.action.members.reserve(ranks.size());
    for (int r : ranks) nd.action.members.push_back(order[r]);
    std::sort(nd.action.members.begin(), nd.action.members.end());
    nd.action.value = subset_sum(q, nd.action.members);
    nd.ranks = std::move(ranks);
    return nd;
  };
  auto worse = [](const Node& a, const Node& b) { return better(b.action, a.action); };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> frontier(worse);
  std::set<std::vector<int>> seen;

  std::vector<int> first(k);
  std::iota(first.begin(), first.end(), 0);
  seen.insert(first);
  frontier.push(make(first));

  std::vector<ScoredAction> out;
  while (!frontier.empty()) {
    // Keep draining ties with the m-th value so the final order is exact.
    if (out.size() >= m && frontier.top().action.value < out[m - 1].value) break;
    Node nd = frontier.top();
    frontier.pop();
    for (int j = 0; j < k; ++j) {
      const int next = nd.ranks[j] + 1;
      if (next >= n || (j + 1 < k && next == nd.ranks[j + 1])) continue;
      auto r = nd.ranks;
      r[j] = next;
      if (seen.insert(r).second) frontier.push(make(std::move(r)));
    }
    out.push_back(std::move(nd.action));
  }
  std::stable_sort(out.begin(), out.end(), better);
  if (out.size() > m) out.resize(m);
  return out;
}

std::vector<std::vector<int>> random_subsample_candidates(int n, int k, std::size_t m, Rng& rng) {
  check_nk(static_cast<std::size_t>(std::max(n, 0)), k);
  if (m >= binomial(n, k)) return all_subsets(n, k);
  std::set<std::vector<int>> seen;
  std::vector<std::vector<int>> out;
  out.reserve(m);
  while (out.size() < m) {
    auto s = sample_subset(rng, n, k);
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

Selection select_action(std::span<const double> values, double epsilon, Rng& rng) {
  if (values.empty()) throw ConfigError("select_action: empty candidate list");
  if (epsilon > 0.0 && uniform_real(rng, 0.0, 1.0) < epsilon) {
    return {uniform_index(rng, values.size()), true};
  }
  const auto it = std::max_element(values.begin(), values.end());
  return {static_cast<std::size_t>(it - values.begin()), false};
}

double td_target(double reward, std::span<const double> next_values, double gamma, bool terminal) {
  if (terminal) return reward;
  if (next_values.empty()) throw ConfigError("td_target: empty candidate list for a non-terminal state");
  return reward + gamma * *std::max_element(next_values.begin(), next_values.end());
}

}  // namespace threadtrack::agent
