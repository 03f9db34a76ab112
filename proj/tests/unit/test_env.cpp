#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"
#include "threadtrack/env/bounds.hpp"
#include "threadtrack/env/episode.hpp"
#include "threadtrack/env/synthetic.hpp"
#include "threadtrack/error.hpp"
#include "threadtrack/text/text.hpp"

namespace threadtrack::env {
namespace {

std::vector<DiscussionTree> parse(const std::string& s) {
  std::istringstream in(s);
  return parse_trees(in);
}

std::vector<std::int64_t> ids(const DiscussionTree& t, std::span<const int> nodes) {
  std::vector<std::int64_t> out;
  for (int n : nodes) out.push_back(t.node(n).id);
  return out;
}

TEST(LoadTrees, ThreeNodeTree) {
  auto trees = parse(
      R"({"id": 1, "parent": null, "text": "post", "karma": 3, "ts": 0})" "\n"
      R"({"id": 3, "parent": 1, "text": "late", "karma": 1, "ts": 20})" "\n"
      R"({"id": 2, "parent": 1, "text": "early", "karma": 2, "ts": 10})" "\n");
  ASSERT_EQ(trees.size(), 1u);
  const auto& t = trees[0];
  EXPECT_EQ(t.size(), 3u);
  auto kids = t.children(0);
  ASSERT_EQ(kids.size(), 2u);
  EXPECT_EQ(t.node(kids[0]).id, 2);
  EXPECT_EQ(t.node(kids[1]).id, 3);
}

TEST(LoadTrees, SelfParentIsCycle) {
  try {
    parse(R"({"id": 1, "parent": null, "text": "p", "karma": 0, "ts": 0})" "\n"
          R"({"id": 2, "parent": 2, "text": "x", "karma": 0, "ts": 1})" "\n");
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("cycle"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadTrees, LongerCycle) {
  EXPECT_THROW(parse(R"({"id": 1, "parent": null, "text": "p", "karma": 0, "ts": 0})" "\n"
                     R"({"id": 2, "parent": 3, "text": "x", "karma": 0, "ts": 5})" "\n"
                     R"({"id": 3, "parent": 2, "text": "y", "karma": 0, "ts": 6})" "\n"),
               LoadError);
}

TEST(LoadTrees, ChildOlderThanParent) {
  try {
    parse(R"({"id": 1, "parent": null, "text": "p", "karma": 0, "ts": 10})" "\n"
          R"({"id": 2, "parent": 1, "text": "x", "karma": 0, "ts": 5})" "\n");
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
}

TEST(LoadTrees, MissingParentAndMalformedLines) {
  EXPECT_THROW(parse(R"({"id": 1, "parent": null, "text": "p", "karma": 0, "ts": 0})" "\n"
                     R"({"id": 2, "parent": 9, "text": "x", "karma": 0, "ts": 5})" "\n"),
               LoadError);
  try {
    parse(R"({"id": 1, "parent": null, "text": "p", "karma": 0, "ts": 0})" "\n{oops\n");
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse(R"({"id": 2, "parent": 1, "text": "x", "karma": 0, "ts": 5})" "\n"), LoadError);
}

TEST(LoadTrees, BlankLinesSeparateTrees) {
  auto trees = parse(
      R"({"id": 1, "parent": null, "text": "a", "karma": 0, "ts": 0})" "\n\n"
      R"({"id": 7, "parent": null, "text": "b", "karma": 0, "ts": 0})" "\n"
      R"({"id": 8, "parent": 7, "text": "c", "karma": 4, "ts": 1})" "\n");
  ASSERT_EQ(trees.size(), 2u);
  EXPECT_EQ(trees[1].size(), 2u);
}

TEST(LoadTrees, WriteParseRoundTripAndDirectoryLayout) {
  auto g = testing::small_generator();
  g.trees = 3;
  auto trees = generate_synthetic(g);
  std::stringstream ss;
  write_trees(ss, trees);
  auto back = parse_trees(ss);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    ASSERT_EQ(back[i].size(), trees[i].size());
    for (std::size_t j = 0; j < back[i].size(); ++j) {
      EXPECT_EQ(back[i].node(static_cast<int>(j)).text, trees[i].node(static_cast<int>(j)).text);
      EXPECT_EQ(back[i].node(static_cast<int>(j)).karma, trees[i].node(static_cast<int>(j)).karma);
    }
  }
  const auto dir = std::filesystem::temp_directory_path() / "threadtrack_tree_dir";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < 3; ++i) {
    std::ofstream out(dir / ("t" + std::to_string(i) + ".jsonl"));
    write_trees(out, std::span(&trees[i], 1));
  }
  EXPECT_EQ(load_trees(dir).size(), 3u);
  EXPECT_EQ(load_trees(dir, 1000).size(), 0u);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_trees(dir), LoadError);
}

TEST(Reset, TooSmallTreeIsTerminal) {
  auto t = testing::chain_tree(2);
  auto [s, out] = reset(t, 10, 1);
  EXPECT_TRUE(out.terminal);
  EXPECT_TRUE(s.terminal());
}

TEST(Reset, ChainGivesEarliestTen) {
  auto t = testing::chain_tree(12);
  auto [s, out] = reset(t, 10, 2);
  ASSERT_FALSE(out.terminal);
  std::vector<std::int64_t> expect;
  for (int i = 2; i <= 11; ++i) expect.push_back(i);
  EXPECT_EQ(out.candidates, expect);
  EXPECT_EQ(s.tracked().size(), 1u);
  EXPECT_EQ(s.tracked()[0], 0);
}

TEST(Reset, TimestampTiesBreakById) {
  std::vector<Comment> c{{1, std::nullopt, "p", 0, 0}, {9, 1, "a", 0, 5}, {4, 1, "b", 0, 5}, {6, 1, "c", 0, 5}};
  auto t = DiscussionTree::build(c);
  auto [s, out] = reset(t, 3, 1);
  EXPECT_EQ(out.candidates, (std::vector<std::int64_t>{4, 6, 9}));
}

TEST(Reset, RejectsBadConfig) {
  auto t = testing::chain_tree(12);
  EXPECT_THROW(reset(t, 0, 1), ConfigError);
  EXPECT_THROW(reset(t, 3, 4), ConfigError);
  EXPECT_THROW(reset(t, 3, 0), ConfigError);
}

TEST(Step, RewardIsKarmaSum) {
  std::vector<Comment> c{{1, std::nullopt, "p", 0, 0}, {2, 1, "a", 10, 1}, {3, 1, "b", 5, 2},
                         {4, 1, "c", 1, 3}, {5, 1, "d", 7, 4}};
  auto t = DiscussionTree::build(c);
  auto [s, out] = reset(t, 4, 3);
  std::vector<std::int64_t> act{2, 3, 4};
  EXPECT_EQ(step(s, act).reward, 16);
}

TEST(Step, RejectsInvalidActions) {
  auto t = testing::chain_tree(12);
  auto [s, out] = reset(t, 3, 2);
  std::vector<std::int64_t> not_candidate{2, 9};
  EXPECT_THROW(step(s, not_candidate), ActionError);
  std::vector<std::int64_t> dup{2, 2};
  EXPECT_THROW(step(s, dup), ActionError);
  std::vector<std::int64_t> short_action{2};
  EXPECT_THROW(step(s, short_action), ActionError);
  std::vector<std::int64_t> unknown{2, 999};
  EXPECT_THROW(step(s, unknown), ActionError);
}

TEST(Step, HandTracedThirtyNodeFixture) {
  auto trees = load_trees(testing::fixture("trace30.jsonl"));
  ASSERT_EQ(trees.size(), 1u);
  const auto& t = trees[0];
  ASSERT_EQ(t.size(), 30u);
  auto [s, out] = reset(t, 3, 2);
  EXPECT_EQ(out.candidates, (std::vector<std::int64_t>{1, 2, 3}));
  EXPECT_EQ(s.t_now(), 30);

  struct Expect {
    std::vector<std::int64_t> action;
    std::int64_t reward;
    std::vector<std::int64_t> next;
    bool terminal;
    std::int64_t t_now;
  };
  const std::vector<Expect> script{
      {{1, 3}, 11, {6, 7, 9}, false, 90},
      {{7, 9}, 7, {11, 13, 17}, false, 170},
      {{11, 13}, -3, {18, 23, 24}, false, 240},
      {{18, 23}, 6, {}, true, 240},
  };
  std::int64_t total = 0;
  for (const auto& e : script) {
    auto r = step(s, e.action);
    EXPECT_EQ(r.reward, e.reward);
    EXPECT_EQ(r.candidates, e.next);
    EXPECT_EQ(r.terminal, e.terminal);
    if (!e.terminal) EXPECT_EQ(s.t_now(), e.t_now);
    total += r.reward;
  }
  EXPECT_EQ(total, 21);
  EXPECT_THROW(step(s, script.back().action), ActionError);
}

TEST(Step, InvariantsOnRandomEpisodes) {
  auto g = testing::small_generator(9);
  g.trees = 30;
  auto trees = generate_synthetic(g);
  Rng rng(1);
  for (const auto& t : trees) {
    const int n = 3 + static_cast<int>(uniform_index(rng, 6));
    const int k = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n)));
    auto [s, out] = reset(t, n, k);
    std::set<int> offered(s.candidates().begin(), s.candidates().end());
    int steps = 0;
    while (!s.terminal()) {
      auto pick = sample_subset(rng, n, k);
      std::vector<int> action;
      std::int64_t expect = 0;
      for (int i : pick) {
        action.push_back(s.candidates()[i]);
        expect += t.node(s.candidates()[i]).karma;
      }
      auto r = step_nodes(s, action);
      EXPECT_EQ(r.reward, expect);
      ASSERT_EQ(s.tracked().size(), static_cast<std::size_t>(k));
      for (int c : s.candidates()) {
        EXPECT_TRUE(offered.insert(c).second) << "offered twice";
        bool below = false;
        for (int m : s.tracked()) below = below || t.is_descendant(c, m);
        EXPECT_TRUE(below);
      }
      ASSERT_LE(++steps, static_cast<int>(t.size()));
    }
  }
}

TEST(Oracle, PathGraphSumsEverything) {
  auto t = testing::chain_tree(8);
  std::int64_t all = 0;
  for (std::size_t i = 0; i < t.size(); ++i) all += t.node(static_cast<int>(i)).karma;
  for (int k = 1; k <= 4; ++k) EXPECT_EQ(oracle_upper_bound(t, k), all);
}

TEST(Oracle, TwoDisjointBranches) {
  std::vector<Comment> c{{1, std::nullopt, "p", 0, 0}, {2, 1, "a", 4, 1}, {3, 2, "b", 3, 2},
                         {4, 1, "c", 5, 3}};
  EXPECT_EQ(oracle_upper_bound(DiscussionTree::build(c), 2), 12);
}

TEST(Oracle, SevenNodeOverlapFixture) {
  auto t = load_trees(testing::fixture("overlap7.jsonl")).at(0);
  // Threads: 1-2-3 = 8, 1-2-4 = 10, 1-5-6-7 = 11.
  EXPECT_EQ(oracle_upper_bound(t, 1), 11);
  EXPECT_EQ(oracle_upper_bound(t, 2), 20);  // {1-2-4, 1-5-6-7}
  EXPECT_EQ(oracle_upper_bound(t, 3), 22);  // every node once
  EXPECT_EQ(oracle_upper_bound(t, 5), 22);
}

TEST(Oracle, LeafGuard) {
  std::vector<Comment> c{{1, std::nullopt, "p", 0, 0}};
  for (int i = 2; i <= 12; ++i) c.push_back({i, 1, "x", 1, i});
  auto t = DiscussionTree::build(c);
  EXPECT_THROW(oracle_upper_bound(t, 2, 10), ConfigError);
  EXPECT_EQ(oracle_upper_bound(t, 2, 11), 2);
}

TEST(Oracle, MatchesIndependentReferences) {
  Rng rng(12);
  for (int trial = 0; trial < 60; ++trial) {
    auto t = testing::random_tree(rng, 3 + static_cast<int>(uniform_index(rng, 12)), -5, 9);
    for (int k = 1; k <= 4; ++k) {
      const auto o = oracle_upper_bound(t, k);
      EXPECT_EQ(o, testing::oracle_by_dp(t, k));
      EXPECT_EQ(o, testing::oracle_by_subsets(t, k));
    }
  }
}

TEST(Oracle, BoundsSingleThreadPolicies) {
  // With K = 1 and non-negative karma every policy's tracked comments lie on
  // one thread, so the best policy cannot beat the oracle.
  Rng rng(13);
  for (int trial = 0; trial < 60; ++trial) {
    auto t = testing::random_tree(rng, 4 + static_cast<int>(uniform_index(rng, 14)), 0, 9);
    for (int n = 1; n <= 2; ++n) {
      auto [s, out] = reset(t, n, 1);
      EXPECT_GE(oracle_upper_bound(t, 1), testing::best_policy_reward(s));
    }
  }
}

TEST(Oracle, BranchingPolicyCanExceedThreadBound) {
  // A tracked pair may fan out over more than K threads later on.
  std::vector<Comment> c{{1, std::nullopt, "p", 0, 0}, {2, 1, "a", 10, 1}, {3, 1, "b", 10, 2},
                         {4, 2, "a1", 10, 3}, {5, 2, "a2", 10, 4}};
  auto t = DiscussionTree::build(c);
  auto [s, out] = reset(t, 2, 2);
  EXPECT_EQ(testing::best_policy_reward(s), 40);
  EXPECT_EQ(oracle_upper_bound(t, 2), 30);
}

TEST(RandomRollout, ZeroKarmaTree) {
  std::vector<Comment> c{{1, std::nullopt, "p", 0, 0}};
  for (int i = 2; i <= 30; ++i) c.push_back({i, 1 + (i - 2) / 3, "x", 0, i});
  auto t = DiscussionTree::build(c);
  EXPECT_EQ(random_rollout(t, 3, 2, 5), 0);
}

TEST(RandomRollout, SeedDeterminism) {
  auto trees = generate_synthetic(testing::small_generator(4));
  for (const auto& t : trees) EXPECT_EQ(random_rollout(t, 5, 2, 77), random_rollout(t, 5, 2, 77));
}

TEST(RandomRollout, MeanBelowOracleMean) {
  auto g = testing::small_generator(5);
  g.trees = 40;
  auto trees = generate_synthetic(g);
  double rnd = 0.0, orc = 0.0;
  int counted = 0;
  for (const auto& t : trees) {
    if (t.leaves().size() > kDefaultOracleLeafLimit) continue;
    for (int e = 0; e < 250; ++e) rnd += static_cast<double>(random_rollout(t, 5, 1, derive_seed(1, e)));
    orc += 250.0 * static_cast<double>(oracle_upper_bound(t, 1));
    counted += 250;
  }
  ASSERT_GT(counted, 0);
  EXPECT_LT(rnd / counted, orc / counted);
}

TEST(Synthetic, Deterministic) {
  auto g = testing::small_generator(21);
  auto a = generate_synthetic(g);
  auto b = generate_synthetic(g);
  std::stringstream sa, sb;
  write_trees(sa, a);
  write_trees(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  std::stringstream sc;
  write_trees(sc, generate_synthetic(g, 22));
  EXPECT_NE(sa.str(), sc.str());
}

TEST(Synthetic, NoNearDuplicateSiblingsWithoutDuplicates) {
  auto g = testing::small_generator(6);
  g.duplicate_rate = 0.0;
  g.trees = 20;
  for (const auto& t : generate_synthetic(g)) {
    for (std::size_t v = 0; v < t.size(); ++v) {
      auto kids = t.children(static_cast<int>(v));
      for (std::size_t i = 0; i < kids.size(); ++i) {
        for (std::size_t j = i + 1; j < kids.size(); ++j) {
          EXPECT_LE(token_overlap(t.node(kids[i]).text, t.node(kids[j]).text), 0.8);
        }
      }
    }
  }
}

TEST(Synthetic, DuplicatesAppearWhenRequested) {
  auto g = testing::small_generator(6);
  g.duplicate_rate = 0.5;
  int near = 0;
  for (const auto& t : generate_synthetic(g)) {
    for (std::size_t v = 0; v < t.size(); ++v) {
      auto kids = t.children(static_cast<int>(v));
      for (std::size_t i = 0; i < kids.size(); ++i) {
        for (std::size_t j = i + 1; j < kids.size(); ++j) {
          near += token_overlap(t.node(kids[i]).text, t.node(kids[j]).text) > 0.8;
        }
      }
    }
  }
  EXPECT_GT(near, 10);
}

TEST(Synthetic, PlantedTopicsRaiseKarma) {
  auto g = testing::small_generator(8);
  g.trees = 60;
  g.topic_rate = 0.15;
  double hi = 0, lo = 0;
  int n_hi = 0, n_lo = 0;
  for (const auto& t : generate_synthetic(g)) {
    for (std::size_t v = 1; v < t.size(); ++v) {
      int topics = 0;
      for (const auto& tok : text::preprocess(t.node(static_cast<int>(v)).text)) {
        topics += tok.rfind("topic", 0) == 0;
      }
      if (topics >= 2) {
        hi += static_cast<double>(t.node(static_cast<int>(v)).karma);
        ++n_hi;
      } else if (topics == 0) {
        lo += static_cast<double>(t.node(static_cast<int>(v)).karma);
        ++n_lo;
      }
    }
  }
  ASSERT_GT(n_hi, 0);
  ASSERT_GT(n_lo, 0);
  EXPECT_GT(hi / n_hi, lo / n_lo);
}

TEST(Synthetic, RejectsInvalidConfig) {
  GeneratorConfig g;
  g.branching = 1.5;
  EXPECT_THROW(generate_synthetic(g), ConfigError);
  g = GeneratorConfig{};
  g.trees = 0;
  EXPECT_THROW(g.validate(), ConfigError);
  g = GeneratorConfig{};
  g.duplicate_rate = -0.1;
  EXPECT_THROW(g.validate(), ConfigError);
  EXPECT_THROW(parse_generator_config(R"({"trees": 3, "bogus": 1})"), ConfigError);
  EXPECT_THROW(parse_generator_config(R"({"trees": "many"})"), ConfigError);
}

TEST(Synthetic, ConfigJsonRoundTrip) {
  auto g = testing::small_generator(99);
  g.karma_noise = 2.5;
  auto back = parse_generator_config(to_json(g));
  EXPECT_EQ(to_json(back), to_json(g));
}

}  // namespace
}  // namespace threadtrack::env
