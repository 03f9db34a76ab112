#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "threadtrack/env/tree.hpp"

namespace threadtrack::env {

struct StepOutcome {
  std::vector<std::int64_t> candidates;  // ids of C_t; empty when terminal
  bool terminal = false;
  std::int64_t reward = 0;
};

// Tracking episode over one tree. M_0 is the post; every later tracked set
// has exactly K comments. A comment is offered as a candidate at most once.
class EpisodeState {
 public:
  const DiscussionTree& tree() const { return *tree_; }
  int n() const { return n_; }
  int k() const { return k_; }
  int step() const { return step_; }
  bool terminal() const { return terminal_; }
  // Time at which the current candidate window filled up.
  std::int64_t t_now() const { return t_now_; }

  std::span<const int> tracked() const { return history_.back(); }
  const std::vector<std::vector<int>>& history() const { return history_; }
  // Node indices of C_t in (timestamp, id) order.
  std::span<const int> candidates() const { return candidates_; }
  bool offered(int node) const { return offered_[static_cast<std::size_t>(node)]; }

 private:
  friend std::pair<EpisodeState, StepOutcome> reset(const DiscussionTree&, int, int);
  friend StepOutcome step_nodes(EpisodeState&, std::span<const int>);

  void fill_candidates(bool whole_tree);
  StepOutcome outcome(std::int64_t reward) const;

  const DiscussionTree* tree_ = nullptr;
  int n_ = 0;
  int k_ = 0;
  int step_ = 0;
  bool terminal_ = false;
  std::int64_t t_now_ = 0;
  std::vector<std::vector<int>> history_;
  std::vector<int> candidates_;
  std::vector<bool> offered_;
};

// Starts an episode: M_0 = {post}, C_0 = the N earliest comments.
// Throws ConfigError unless 1 <= K <= N.
std::pair<EpisodeState, StepOutcome> reset(const DiscussionTree& tree, int n, int k);

// Tracks `action` (K distinct candidate ids), pays their summed karma and
// offers the earliest N unoffered comments below the new tracked set.
StepOutcome step(EpisodeState& state, std::span<const std::int64_t> action);
// Same, with node indices.
StepOutcome step_nodes(EpisodeState& state, std::span<const int> action);

}  // namespace threadtrack::env
