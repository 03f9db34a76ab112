#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "threadtrack/error.hpp"
#include "threadtrack/experiment/experiment.hpp"

namespace threadtrack::experiment {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("threadtrack_exp_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig tiny_config() {
  RunConfig c;
  c.generator = testing::small_generator(4);
  c.agent.n = 6;
  c.agent.k = 2;
  c.agent.m = 5;
  c.agent.batch = 20;
  c.agent.episodes_per_replay = 20;
  c.agent.episodes_total = 40;
  c.agent.eta = 1e-2;
  c.agent.reward_scale = 0.1;
  c.phase1_episodes = 40;
  c.eval_episodes = 15;
  c.runs = 2;
  return c;
}

TEST(Stats, SampleStdUsesNMinusOne) {
  const std::vector<double> v{1.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(mean_of(v), 2.0);
  EXPECT_DOUBLE_EQ(sample_std(v), 1.0);
  const std::vector<double> one{5.0};
  EXPECT_EQ(sample_std(one), 0.0);
}

TEST(RunConfigTest, JsonRoundTrip) {
  RunConfig c = tiny_config();
  c.knowledge = KnowledgeMode::kPastWeek;
  c.search = SearchMode::kFullSumOnly;
  c.seed = 99;
  c.warm_start = false;
  const RunConfig back = parse_run_config(to_json(c));
  EXPECT_EQ(back.knowledge, KnowledgeMode::kPastWeek);
  EXPECT_EQ(back.search, SearchMode::kFullSumOnly);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.agent.k, 2);
  EXPECT_EQ(back.agent.m, 5u);
  EXPECT_EQ(back.generator.trees, c.generator.trees);
  EXPECT_FALSE(back.warm_start);
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(RunConfigTest, Rejects) {
  EXPECT_THROW(parse_run_config(R"({"bogus": 1})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"agent": {"kk": 1}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"knowledge_mode": "rule:yesterday"})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"search_mode": "beam"})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"runs": "five"})"), ConfigError);
  EXPECT_THROW(parse_run_config("[1, 2"), ConfigError);
  RunConfig c = parse_run_config(R"({"runs": 0})");
  EXPECT_THROW(c.validate(), ConfigError);
  c = parse_run_config(R"({"agent": {"n": 3, "k": 4}})");
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.corpus = "trees.jsonl";
  c.knowledge = KnowledgeMode::kAttention;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ResolveCorpus, Errors) {
  RunConfig c = tiny_config();
  c.corpus = "/nonexistent/trees.jsonl";
  EXPECT_THROW(resolve_corpus(c), LoadError);
  c = tiny_config();
  c.agent.n = 500;
  c.agent.k = 1;
  EXPECT_THROW(resolve_corpus(c), ConfigError);
}

TEST(ResolveCorpus, FileWithoutKnowledgeHasNoStore) {
  RunConfig c = tiny_config();
  c.corpus = testing::fixture("trace30.jsonl");
  c.agent.n = 3;
  c.agent.k = 1;
  c.agent.m = 3;
  const auto corpus = resolve_corpus(c);
  EXPECT_EQ(corpus->store, nullptr);
  EXPECT_EQ(corpus->eligible, corpus->trees.size());
  EXPECT_THROW(corpus->view(true), ConfigError);
}

TEST(RunExperiment, DeterministicAcrossReruns) {
  RunConfig c = tiny_config();
  const auto first = scratch_dir("det_a");
  c.out_dir = first;
  const auto a = run_experiment(c);
  c.out_dir = scratch_dir("det_b");
  c.workers = 2;
  const auto b = run_experiment(c);
  for (const char* f : {"train_phase1.csv", "train_phase2.csv", "eval.csv", "summary.csv"}) {
    const auto x = slurp(first / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(c.out_dir / f)) << f;
  }
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.runs.size(), 2u);
  EXPECT_NE(a.runs[0].seed, a.runs[1].seed);
}

TEST(RunExperiment, CsvCarriesConfigHeader) {
  RunConfig c = tiny_config();
  c.runs = 1;
  c.out_dir = scratch_dir("header");
  const auto s = run_experiment(c);
  const auto text = slurp(c.out_dir / "summary.csv");
  EXPECT_NE(text.find("# agent.k=2\n"), std::string::npos);
  EXPECT_NE(text.find("# seed=0\n"), std::string::npos);
  EXPECT_NE(text.find("# generator.trees=12\n"), std::string::npos);
  EXPECT_EQ(text.find("# out="), std::string::npos);
  EXPECT_EQ(text.find("# workers="), std::string::npos);
  EXPECT_EQ(s.std, 0.0);
  ASSERT_FALSE(s.warnings.empty());
  EXPECT_NE(s.warnings.front().find("runs=1"), std::string::npos);
  EXPECT_TRUE(fs::exists(c.out_dir / "summary.txt"));
  EXPECT_TRUE(fs::exists(c.out_dir / "models" / "run0_q0.json"));
  EXPECT_TRUE(fs::exists(c.out_dir / "models" / "run0_q2.json"));
}

TEST(RunExperiment, SeedChangesResults) {
  RunConfig c = tiny_config();
  c.runs = 1;
  const auto first = scratch_dir("seed_a");
  c.out_dir = first;
  run_experiment(c);
  c.seed = 1;
  c.out_dir = scratch_dir("seed_b");
  run_experiment(c);
  EXPECT_NE(slurp(first / "eval.csv"), slurp(c.out_dir / "eval.csv"));
}

TEST(RunExperiment, FullSumOnlySkipsPhaseTwo) {
  RunConfig c = tiny_config();
  c.runs = 1;
  c.search = SearchMode::kFullSumOnly;
  c.out_dir = scratch_dir("fso");
  const auto s = run_experiment(c);
  EXPECT_TRUE(s.runs[0].phase2_log.empty());
  EXPECT_EQ(s.runs[0].q2, nullptr);
  EXPECT_FALSE(s.runs[0].phase1_log.empty());
}

TEST(RunExperiment, TwoStageWithSingleCommentWarns) {
  RunConfig c = tiny_config();
  c.runs = 2;
  c.agent.k = 1;
  c.out_dir = scratch_dir("k1");
  const auto s = run_experiment(c);
  bool warned = false;
  for (const auto& w : s.warnings) warned |= w.find("K=1") != std::string::npos;
  EXPECT_TRUE(warned);
}

TEST(RunExperiment, CacheHitKeepsOutputs) {
  RunConfig c = tiny_config();
  const auto first = scratch_dir("cache_a");
  c.out_dir = first;
  const auto corpus = resolve_corpus(c);
  Phase1Cache cache;
  run_experiment(c, corpus, &cache);
  c.out_dir = scratch_dir("cache_b");
  run_experiment(c, corpus, &cache);
  for (const char* f : {"train_phase1.csv", "eval.csv"}) {
    EXPECT_EQ(slurp(first / f), slurp(c.out_dir / f)) << f;
  }
}

TEST(RunExperiment, SavedModelsReproduceEvaluation) {
  RunConfig c = tiny_config();
  c.out_dir = scratch_dir("saved_train");
  const auto trained = run_experiment(c);
  const fs::path models = c.out_dir / "models";
  const auto train_eval = slurp(c.out_dir / "eval.csv");
  c.out_dir = scratch_dir("saved_eval");
  const auto evaluated = evaluate_saved(c, models);
  EXPECT_EQ(evaluated.mean, trained.mean);
  EXPECT_EQ(slurp(c.out_dir / "eval.csv"), train_eval);
  c.knowledge = KnowledgeMode::kAttention;
  EXPECT_THROW(evaluate_saved(c, models), ConfigError);
}

TEST(Ablation, FourCellsOnSharedSeeds) {
  RunConfig c = tiny_config();
  c.out_dir = scratch_dir("ablate");
  const auto cells = run_ablation(c);
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0].search, SearchMode::kRandomSubsample);
  EXPECT_EQ(cells[0].knowledge, KnowledgeMode::kNone);
  EXPECT_EQ(cells[3].search, SearchMode::kTwoStage);
  EXPECT_EQ(cells[3].knowledge, KnowledgeMode::kAttention);
  for (const auto& cell : cells) {
    ASSERT_EQ(cell.summary.runs.size(), 2u);
    EXPECT_EQ(cell.summary.runs[1].seed, cells[0].summary.runs[1].seed);
  }
  // Cells sharing the knowledge mode share the phase-1 network.
  EXPECT_EQ(cells[0].summary.runs[0].q0, cells[1].summary.runs[0].q0);
  EXPECT_NE(cells[0].summary.runs[0].q0, cells[2].summary.runs[0].q0);
  const auto table = slurp(c.out_dir / "ablation.csv");
  EXPECT_NE(table.find("knowledge+two_stage,attention,two_stage,mean"), std::string::npos);
  EXPECT_TRUE(fs::exists(c.out_dir / "two_stage" / "summary.csv"));
}

TEST(Bounds, OverlapFixture) {
  const auto trees = env::load_trees(testing::fixture("overlap7.jsonl"));
  auto rows = report_bounds(trees, 2, 1, 50, 7);
  ASSERT_EQ(rows.size(), 1u);
  ASSERT_TRUE(rows[0].oracle.has_value());
  EXPECT_EQ(*rows[0].oracle, 11);
  EXPECT_EQ(rows[0].comments, 6u);
  EXPECT_LE(rows[0].random_mean, 11.0);
  rows = report_bounds(trees, 2, 2, 50, 7);
  EXPECT_EQ(*rows[0].oracle, 20);
  rows = report_bounds(trees, 2, 2, 5, 7, /*max_leaves=*/1);
  EXPECT_FALSE(rows[0].oracle.has_value());
  std::ostringstream out;
  write_bounds(out, rows);
  EXPECT_NE(out.str().find(",6,,"), std::string::npos);
}

TEST(Bench, ReportsEveryK) {
  RunConfig c = tiny_config();
  const std::vector<int> ks{1, 2, 3};
  const auto report = bench_search(c, ks, 10);
  ASSERT_EQ(report.rows.size(), 3u);
  EXPECT_EQ(report.rows[1].subsets, 15u);  // C(6, 2)
  EXPECT_EQ(report.rows[2].subsets, 20u);
  for (const auto& r : report.rows) {
    EXPECT_GT(r.full_space_us, 0.0);
    EXPECT_GT(r.two_stage_us, 0.0);
    EXPECT_GT(r.model_ops, 0.0);
  }
  EXPECT_LT(report.rows[1].model_ops, report.rows[2].model_ops);
  const std::vector<int> bad{7};
  EXPECT_THROW(bench_search(c, bad, 10), ConfigError);
}

}  // namespace
}  // namespace threadtrack::experiment
