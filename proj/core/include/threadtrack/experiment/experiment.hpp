#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "threadtrack/agent/trainer.hpp"
#include "threadtrack/env/bounds.hpp"
#include "threadtrack/env/synthetic.hpp"
#include "threadtrack/env/tree.hpp"
#include "threadtrack/knowledge/attention.hpp"
#include "threadtrack/knowledge/store.hpp"
#include "threadtrack/qnet/drrn.hpp"
#include "threadtrack/text/encoder.hpp"

namespace threadtrack::experiment {

using agent::SearchMode;
using knowledge::KnowledgeMode;

struct RunConfig {
  std::string subcommand = "train";
  // Tree corpus (file or directory). Empty means: generate from `generator`.
  std::filesystem::path corpus;
  // Knowledge corpus; generated alongside synthetic trees when empty.
  std::filesystem::path knowledge_corpus;
  env::GeneratorConfig generator;
  agent::AgentConfig agent;  // K, m, N, ... of the evaluated task
  KnowledgeMode knowledge = KnowledgeMode::kNone;
  SearchMode search = SearchMode::kTwoStage;
  int runs = 5;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  int phase1_episodes = 2000;  // K = 1 pre-training of Q0
  std::optional<double> phase1_replay_passes;  // unset: agent.replay_passes
  int eval_episodes = 500;
  double eval_epsilon = 0.0;
  int workers = 1;
  bool warm_start = true;  // Q2 encoders start from the trained Q0

  // Throws ConfigError.
  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string to_json(const RunConfig& cfg);

// Trees, fitted text encoder, optional knowledge store, encoded trees.
struct LoadedCorpus {
  std::vector<env::DiscussionTree> trees;
  std::shared_ptr<text::TextEncoder> encoder;
  std::unique_ptr<knowledge::KnowledgeStore> store;
  std::vector<agent::EncodedTree> encoded;
  std::size_t eligible = 0;  // trees with at least N comments

  agent::Corpus view(bool with_knowledge) const;
};

// Loads or generates the corpus of `cfg`. The encoder is fitted on the tree
// texts. Throws LoadError / ConfigError.
std::shared_ptr<const LoadedCorpus> resolve_corpus(const RunConfig& cfg);

// Seed of run r.
std::uint64_t run_seed(const RunConfig& cfg, int run);

struct Phase1Result {
  qnet::DrrnParams q0;
  std::vector<agent::EpisodeLog> log;
};

struct RunResult {
  int run = 0;
  std::uint64_t seed = 0;
  double mean_reward = 0.0;
  double random_mean_reward = 0.0;
  std::vector<double> eval_rewards;
  std::vector<agent::EpisodeLog> phase1_log;
  std::vector<agent::EpisodeLog> phase2_log;
  double phase1_seconds = 0.0;
  double phase2_seconds = 0.0;
  double eval_seconds = 0.0;
  std::shared_ptr<const Phase1Result> q0;        // trained Q0 and its log
  std::shared_ptr<const qnet::DrrnBiLstmParams> q2;  // null for full_sum_only
};

struct MetricsSummary {
  std::string label;
  std::vector<RunResult> runs;
  double mean = 0.0;
  double std = 0.0;  // sample std of run means, 0 for a single run
  double random_mean = 0.0;
  double random_std = 0.0;
  int eval_episodes = 0;
  std::vector<std::string> warnings;
};

// Sample standard deviation (n - 1); 0 when fewer than two values.
double sample_std(std::span<const double> values);
double mean_of(std::span<const double> values);

// Trained Q0 networks keyed by run seed, knowledge mode and phase-1
// settings, so configurations that differ only in the search side reuse
// one pre-training. Only valid for a single corpus.
class Phase1Cache {
 public:
  std::shared_ptr<const Phase1Result> find(const std::string& key) const;
  void put(const std::string& key, std::shared_ptr<const Phase1Result> result);

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const Phase1Result>> entries_;
};

// One seeded run: phase 1, phase 2 (unless full_sum_only or K = 1), greedy
// evaluation and the random baseline on the same schedule.
RunResult run_once(const RunConfig& cfg, const LoadedCorpus& corpus, int run,
                   Phase1Cache* cache = nullptr);

// `runs` runs on up to `workers` threads. Writes to cfg.out_dir:
//   train_phase1.csv, train_phase2.csv   per-episode training logs
//   eval.csv     per-episode evaluation rewards
//   summary.csv  per-run and aggregate rewards
//   summary.txt  human-readable summary with wall-clock timings
//   models/      trained Q0 and Q2 of every run
// Every CSV starts with "# key=value" lines holding the full config.
MetricsSummary run_experiment(const RunConfig& cfg, Phase1Cache* cache = nullptr);
MetricsSummary run_experiment(const RunConfig& cfg,
                              std::shared_ptr<const LoadedCorpus> corpus, Phase1Cache* cache);

// Evaluates models saved by run_experiment under models_dir (run<r>_q0.json,
// run<r>_q2.json) with the evaluation schedule of cfg; writes eval.csv,
// summary.csv and summary.txt.
MetricsSummary evaluate_saved(const RunConfig& cfg, const std::filesystem::path& models_dir);

struct AblationCell {
  std::string name;
  KnowledgeMode knowledge = KnowledgeMode::kNone;
  SearchMode search = SearchMode::kRandomSubsample;
  MetricsSummary summary;
};

// {no knowledge, knowledge} x {random_subsample, two_stage} on one corpus and
// seed set. The knowledge cells use cfg.knowledge, or attention when that is
// none. Cell outputs go to out_dir/<cell>/, the table to out_dir/ablation.csv.
std::vector<AblationCell> run_ablation(const RunConfig& cfg);

struct BenchRow {
  int k = 0;
  std::size_t subsets = 0;                 // C(N, K)
  double random_subsample_us = 0.0;        // per step
  double two_stage_us = 0.0;
  double full_space_us = 0.0;
  double model_ops = 0.0;                  // operation-count model of full space
  double predicted_full_space_us = 0.0;    // model_ops scaled by the fitted rate
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double us_per_op = 0.0;
  int steps = 0;
};

// Per-step candidate-evaluation time of random subsampling (m Q2 calls),
// two-stage (N Q0 calls, top-m search, m Q2 calls) and the full space
// (C(N, K) Q2 calls) on randomly initialized networks over states sampled
// from random play. Environment stepping is outside the timed region.
BenchReport bench_search(const RunConfig& cfg, std::span<const int> ks, int steps);
void write_bench(std::ostream& out, const BenchReport& report);

struct BoundsRow {
  std::int64_t tree_id = 0;
  std::size_t comments = 0;
  std::optional<std::int64_t> oracle;  // empty when the leaf guard refused the tree
  double random_mean = 0.0;
};

// Oracle upper bound and random-policy mean per tree. Trees beyond the leaf
// guard are reported without an oracle value.
std::vector<BoundsRow> report_bounds(std::span<const env::DiscussionTree> trees, int n, int k,
                                     int random_episodes, std::uint64_t seed,
                                     std::size_t max_leaves = env::kDefaultOracleLeafLimit);
void write_bounds(std::ostream& out, std::span<const BoundsRow> rows);

}  // namespace threadtrack::experiment
