#include "threadtrack/env/episode.hpp"

#include <algorithm>

#include "threadtrack/error.hpp"

namespace threadtrack::env {

void EpisodeState::fill_candidates(bool whole_tree) {
  candidates_.clear();
  const auto& tracked = history_.back();
  const int size = static_cast<int>(tree_->size());
  std::vector<int> found;
  for (int node = 1; node < size && static_cast<int>(found.size()) < n_; ++node) {
    if (offered_[static_cast<std::size_t>(node)]) continue;
    bool below = whole_tree;
    for (std::size_t i = 0; !below && i < tracked.size(); ++i) {
      below = tree_->is_descendant(node, tracked[i]);
    }
    if (below) found.push_back(node);
  }
  if (static_cast<int>(found.size()) < n_) {
    terminal_ = true;
    return;
  }
  candidates_ = std::move(found);
  for (int c : candidates_) {
    offered_[static_cast<std::size_t>(c)] = true;
    t_now_ = std::max(t_now_, tree_->node(c).timestamp);
  }
}

StepOutcome EpisodeState::outcome(std::int64_t reward) const {
  StepOutcome out;
  out.terminal = terminal_;
  out.reward = reward;
  out.candidates.reserve(candidates_.size());
  for (int c : candidates_) out.candidates.push_back(tree_->node(c).id);
  return out;
}

std::pair<EpisodeState, StepOutcome> reset(const DiscussionTree& tree, int n, int k) {
  if (n <= 0) throw ConfigError("episode: N must be positive");
  if (k <= 0 || k > n) throw ConfigError("episode: K must satisfy 1 <= K <= N");
  EpisodeState s;
  s.tree_ = &tree;
  s.n_ = n;
  s.k_ = k;
  s.t_now_ = tree.root().timestamp;
  s.history_.push_back({0});
  s.offered_.assign(tree.size(), false);
  s.fill_candidates(/*whole_tree=*/true);
  StepOutcome out = s.outcome(0);
  return {std::move(s), std::move(out)};
}

StepOutcome step_nodes(EpisodeState& state, std::span<const int> action) {
  if (state.terminal_) throw ActionError("episode: step after terminal");
  if (static_cast<int>(action.size()) != state.k_) {
    throw ActionError("episode: action has " + std::to_string(action.size()) +
                      " comments, expected " + std::to_string(state.k_));
  }
  std::vector<int> chosen(action.begin(), action.end());
  std::sort(chosen.begin(), chosen.end());
  if (std::adjacent_find(chosen.begin(), chosen.end()) != chosen.end()) {
    throw ActionError("episode: action repeats a comment");
  }
  std::int64_t reward = 0;
  for (int node : chosen) {
    if (std::find(state.candidates_.begin(), state.candidates_.end(), node) ==
        state.candidates_.end()) {
      const bool valid = node >= 0 && node < static_cast<int>(state.tree_->size());
      throw ActionError("episode: comment " +
                        (valid ? std::to_string(state.tree_->node(node).id) : std::to_string(node)) +
                        " is not a current candidate");
    }
    reward += state.tree_->node(node).karma;
  }
  state.history_.push_back(std::move(chosen));
  ++state.step_;
  state.fill_candidates(/*whole_tree=*/false);
  return state.outcome(reward);
}

StepOutcome step(EpisodeState& state, std::span<const std::int64_t> action) {
  std::vector<int> nodes;
  nodes.reserve(action.size());
  for (auto id : action) {
    auto idx = state.tree().index_of(id);
    if (!idx) throw ActionError("episode: unknown comment id " + std::to_string(id));
    nodes.push_back(*idx);
  }
  return step_nodes(state, nodes);
}

}  // namespace threadtrack::env
