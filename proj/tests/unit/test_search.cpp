#include <algorithm>
#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "threadtrack/agent/search.hpp"
#include "threadtrack/error.hpp"

namespace threadtrack::agent {
namespace {

// Oracle: every subset, sorted by (sum desc, lexicographic asc).
std::vector<ScoredAction> brute_force(const std::vector<double>& q, int k, std::size_t m) {
  std::vector<ScoredAction> all;
  std::vector<int> idx(k);
  std::vector<bool> mask(q.size(), false);
  std::fill(mask.begin(), mask.begin() + k, true);
  do {
    ScoredAction a;
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (mask[i]) a.members.push_back(static_cast<int>(i));
    }
    a.value = 0.0;
    for (int i : a.members) a.value += q[i];
    all.push_back(a);
  } while (std::prev_permutation(mask.begin(), mask.end()));
  std::sort(all.begin(), all.end(), [](const ScoredAction& a, const ScoredAction& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.members < b.members;
  });
  if (all.size() > m) all.resize(m);
  return all;
}

TEST(TopM, WorkedExample) {
  auto b = top_m_actions(std::vector<double>{3, 2, 1}, 2, 2);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[0].members, (std::vector<int>{0, 1}));
  EXPECT_EQ(b[0].value, 5.0);
  EXPECT_EQ(b[1].members, (std::vector<int>{0, 2}));
  EXPECT_EQ(b[1].value, 4.0);
}

TEST(TopM, FullSetWhenKEqualsN) {
  auto b = top_m_actions(std::vector<double>{0.5, -1, 2, 7}, 4, 10);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].members, (std::vector<int>{0, 1, 2, 3}));
}

TEST(TopM, EqualValuesGiveLexicographicPrefix) {
  std::vector<double> q(6, 1.5);
  auto b = top_m_actions(q, 3, 5);
  auto lex = all_subsets(6, 3);
  ASSERT_EQ(b.size(), 5u);
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_EQ(b[i].members, lex[i]);
    EXPECT_EQ(b[i].value, 4.5);
  }
}

TEST(TopM, ReturnsEverySubsetWhenMIsLarge) {
  auto b = top_m_actions(std::vector<double>{1, 2, 3, 4, 5}, 2, 100);
  EXPECT_EQ(b.size(), 10u);
}

TEST(TopM, RejectsBadK) {
  std::vector<double> q{1, 2};
  EXPECT_THROW(top_m_actions(q, 3, 1), ConfigError);
  EXPECT_THROW(top_m_actions(q, 0, 1), ConfigError);
}

TEST(TopM, MatchesBruteForceOnRandomInstances) {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 12));
    const int k = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n)));
    const std::size_t m = 1 + uniform_index(rng, 15);
    std::vector<double> q(n);
    // Coarse values so ties show up often.
    const bool coarse = trial % 2 == 0;
    for (double& v : q) v = coarse ? std::round(uniform_real(rng, -3, 3)) : uniform_real(rng, -1, 1);
    auto expect = brute_force(q, k, m);
    EXPECT_EQ(top_m_actions(q, k, m), expect) << "n=" << n << " k=" << k << " m=" << m;
    if (coarse) {
      EXPECT_EQ(top_m_best_first(q, k, m), expect) << "n=" << n << " k=" << k << " m=" << m;
    } else {
      auto bf = top_m_best_first(q, k, m);
      ASSERT_EQ(bf.size(), expect.size());
      for (std::size_t i = 0; i < bf.size(); ++i) EXPECT_NEAR(bf[i].value, expect[i].value, 1e-12);
    }
  }
}

TEST(TopM, FirstElementIsGlobalMaximum) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> q(10);
    for (double& v : q) v = uniform_real(rng, -5, 5);
    const int k = 1 + static_cast<int>(uniform_index(rng, 5));
    auto b = top_m_actions(q, k, 10);
    double best = -INFINITY;
    for (const auto& s : all_subsets(10, k)) best = std::max(best, subset_sum(q, s));
    EXPECT_EQ(b.front().value, best);
  }
}

TEST(TopM, BestFirstScalesPastEnumeration) {
  std::vector<double> q(40);
  for (int i = 0; i < 40; ++i) q[i] = 40 - i;
  auto b = top_m_best_first(q, 5, 3);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].members, (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(b[1].members, (std::vector<int>{0, 1, 2, 3, 5}));
  EXPECT_EQ(b[2].value, b[1].value - 1);
}

TEST(TopM, ScalingPreservesArgmax) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> q(10), scaled(10);
    const double lambda = uniform_real(rng, 0.01, 100);
    for (int i = 0; i < 10; ++i) {
      q[i] = uniform_real(rng, -1, 1);
      scaled[i] = lambda * q[i];
    }
    EXPECT_EQ(top_m_actions(q, 3, 1)[0].members, top_m_actions(scaled, 3, 1)[0].members);
  }
}

TEST(Binomial, SmallValues) {
  EXPECT_EQ(binomial(10, 3), 120u);
  EXPECT_EQ(binomial(10, 0), 1u);
  EXPECT_EQ(binomial(5, 6), 0u);
  EXPECT_EQ(all_subsets(10, 5).size(), 252u);
}

TEST(RandomSubsample, AllSubsetsWhenMIsLarge) {
  Rng rng(1);
  auto s = random_subsample_candidates(5, 2, 20, rng);
  EXPECT_EQ(s.size(), 10u);
  std::sort(s.begin(), s.end());
  EXPECT_EQ(s, all_subsets(5, 2));
}

TEST(RandomSubsample, ReproducibleAndDistinct) {
  Rng a(42), b(42);
  auto x = random_subsample_candidates(10, 3, 10, a);
  auto y = random_subsample_candidates(10, 3, 10, b);
  EXPECT_EQ(x, y);
  auto sorted = x;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::unique(sorted.begin(), sorted.end()), sorted.end());
}

TEST(RandomSubsample, UniformOverSubsets) {
  Rng rng(5);
  const int n = 6, k = 2;
  const std::size_t m = 4;
  const int draws = 10000;
  std::map<std::vector<int>, int> hits;
  for (int d = 0; d < draws; ++d) {
    for (auto& s : random_subsample_candidates(n, k, m, rng)) ++hits[s];
  }
  const double total = static_cast<double>(binomial(n, k));
  const double p = m / total;
  const double sigma = std::sqrt(draws * p * (1 - p));
  EXPECT_EQ(hits.size(), binomial(n, k));
  for (const auto& [s, c] : hits) EXPECT_NEAR(c, draws * p, 3 * sigma);
}

TEST(SelectAction, GreedyPicksFirstArgmax) {
  Rng rng(0);
  std::vector<double> v{1, 4, 4, -2};
  for (int i = 0; i < 50; ++i) EXPECT_EQ(select_action(v, 0.0, rng).index, 1u);
}

TEST(SelectAction, SingleCandidate) {
  Rng rng(0);
  std::vector<double> v{0.3};
  for (int i = 0; i < 50; ++i) EXPECT_EQ(select_action(v, 1.0, rng).index, 0u);
}

TEST(SelectAction, FullExplorationIsUniform) {
  Rng rng(9);
  const std::size_t m = 10;
  const int draws = 10000;
  std::vector<double> v(m);
  for (std::size_t i = 0; i < m; ++i) v[i] = static_cast<double>(i);
  std::vector<int> hits(m, 0);
  for (int d = 0; d < draws; ++d) ++hits[select_action(v, 1.0, rng).index];
  const double p = 1.0 / m;
  const double sigma = std::sqrt(draws * p * (1 - p));
  for (int h : hits) EXPECT_NEAR(h, draws * p, 3 * sigma);
}

TEST(SelectAction, SeedDeterminism) {
  std::vector<double> v{1, 2, 3, 0};
  Rng a(77), b(77);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(select_action(v, 0.3, a).index, select_action(v, 0.3, b).index);
}

TEST(TdTarget, Cases) {
  EXPECT_EQ(td_target(7, {}, 0.9, true), 7.0);
  std::vector<double> next{1.0, 4.0, -1.0};
  EXPECT_EQ(td_target(3, next, 0.0, false), 3.0);
  EXPECT_NEAR(td_target(2, next, 0.9, false), 5.6, 1e-12);
  EXPECT_THROW(td_target(2, {}, 0.9, false), ConfigError);
}

}  // namespace
}  // namespace threadtrack::agent
