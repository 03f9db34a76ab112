#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "threadtrack/agent/model.hpp"
#include "threadtrack/agent/replay.hpp"
#include "threadtrack/agent/search.hpp"

namespace threadtrack::agent {

enum class SearchMode { kRandomSubsample, kFullSumOnly, kTwoStage };

std::string to_string(SearchMode mode);
SearchMode parse_search_mode(std::string_view text);

struct AgentConfig {
  int n = 10;
  int k = 1;
  std::size_t m = 10;
  double gamma = 0.9;
  double epsilon = 0.1;
  double eta = 1e-6;
  std::size_t batch = 100;
  std::size_t replay_capacity = 10000;
  int episodes_per_replay = 500;
  int episodes_total = 2000;
  // Minibatch updates per replay round = ceil(replay_passes * new transitions / batch).
  double replay_passes = 1.0;
  // Rewards are multiplied by this before entering TD targets.
  double reward_scale = 1.0;
  std::uint64_t seed = 0;

  // Throws ConfigError when an invariant is violated (1 <= K <= N,
  // 1 <= m <= C(N, K), gamma and epsilon in [0, 1], ...).
  void validate() const;
};

// Everything an episode needs besides the networks.
struct Corpus {
  std::span<const EncodedTree> trees;  // only trees with at least N comments are sampled
  const text::TextEncoder* encoder = nullptr;
  const knowledge::KnowledgeStore* store = nullptr;  // null disables knowledge features
};

struct Transition {
  std::shared_ptr<const qnet::StateFeatures> state;
  const EncodedTree* tree = nullptr;
  Action action;
  double reward = 0.0;
  std::shared_ptr<const qnet::StateFeatures> next_state;
  std::vector<Action> next_candidates;  // B_{t+1}; empty when terminal
  bool terminal = false;
};

using TransitionBuffer = ReplayBuffer<Transition>;

struct EpisodeLog {
  int episode = 0;  // 1-based
  int steps = 0;
  double total_reward = 0.0;  // unscaled karma
  std::optional<double> mean_td_error;  // set on episodes that ended with a replay round
};

struct ReplayResult {
  bool skipped = false;  // buffer held fewer than `batch` transitions
  double mean_squared_td_error = 0.0;
};

// One minibatch: sample with replacement, targets from the model's current
// parameters, squared-error gradient through the chosen action only, one SGD
// step with the batch-averaged gradient.
ReplayResult replay_update(const TransitionBuffer& buffer, ValueModel& model, std::size_t batch,
                           double gamma, double eta, Rng& rng);

// Candidate lists over node indices of the current window.
std::vector<Action> candidates_from(std::span<const int> window,
                                    std::span<const ScoredAction> scored);
std::vector<Action> candidates_from(std::span<const int> window,
                                    std::span<const std::vector<int>> subsets);

struct CandidateStats {
  std::size_t q0_evaluations = 0;
  std::size_t subset_sums = 0;
};

// B_t from Q1: one Q0 pass per window comment, then top-m subset search.
std::vector<ScoredAction> build_candidates(SumModel& q1, const qnet::StateFeatures& s,
                                           const EncodedTree& tree, std::span<const int> window,
                                           int k, std::size_t m, CandidateStats* stats = nullptr);

using LogSink = std::function<void(const EpisodeLog&)>;

// Phase 1: Q0 on the K = 1 task, acting as both candidate scorer and selector.
void train_phase1(const Corpus& corpus, const AgentConfig& cfg, SumModel& q0,
                  const LogSink& log = {});

// Phase 2: Q2 trained on B_t produced by the frozen Q1 (two_stage) or by
// random subsampling (random_subsample).
void train_phase2(const Corpus& corpus, const AgentConfig& cfg, SearchMode mode, SumModel& q1,
                  BiLstmModel& q2, const LogSink& log = {});

// Acting policy for evaluation.
struct Policy {
  SearchMode mode = SearchMode::kTwoStage;
  SumModel* q1 = nullptr;      // candidate scorer (two_stage, full_sum_only)
  BiLstmModel* q2 = nullptr;   // selector (two_stage, random_subsample)
};

// Plays one episode on `tree`; returns the total karma collected.
double play_episode(const Corpus& corpus, const EncodedTree& tree, const Policy& policy, int n,
                    int k, std::size_t m, double epsilon, Rng& rng, int* steps = nullptr);

// Mean of `episodes` episodes cycling through the corpus trees in order.
std::vector<double> evaluate(const Corpus& corpus, const Policy& policy, int n, int k,
                             std::size_t m, double epsilon, int episodes, std::uint64_t seed);

// Per-episode rewards of uniformly random K-subset play on the same schedule.
std::vector<double> evaluate_random(const Corpus& corpus, int n, int k, int episodes,
                                    std::uint64_t seed);

// CSV helpers for the training log: run,episode,steps,total_reward,mean_td_error
void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, int run, const EpisodeLog& row);

}  // namespace threadtrack::agent
