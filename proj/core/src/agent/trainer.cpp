#include "threadtrack/agent/trainer.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "threadtrack/env/bounds.hpp"
#include "threadtrack/env/episode.hpp"
#include "threadtrack/error.hpp"

namespace threadtrack::agent {
namespace {

// Beyond this many subsets the lazy frontier beats full enumeration.
constexpr std::uint64_t kEnumerationLimit = 4096;

using CandidateFn = std::function<std::vector<Action>(const qnet::StateFeatures&, const EncodedTree&,
                                                      std::span<const int>)>;

std::vector<std::size_t> eligible_trees(const Corpus& corpus, int n) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corpus.trees.size(); ++i) {
    if (corpus.trees[i].tree->comment_count() >= static_cast<std::size_t>(n)) out.push_back(i);
  }
  if (out.empty()) {
    throw ConfigError("corpus has no tree with at least N=" + std::to_string(n) + " comments");
  }
  if (corpus.encoder == nullptr) throw ConfigError("corpus has no text encoder");
  return out;
}

std::shared_ptr<const qnet::StateFeatures> features(const Corpus& corpus, const text::BowVector& bow,
                                                    std::int64_t t_now) {
  return std::make_shared<qnet::StateFeatures>(
      qnet::make_state_features(*corpus.encoder, bow, t_now, corpus.store));
}

std::string number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Shared epsilon-greedy / replay loop of both training phases.
void train_loop(const Corpus& corpus, const AgentConfig& cfg, ValueModel& learner,
                const CandidateFn& candidates, Rng& rng, const LogSink& log) {
  const auto eligible = eligible_trees(corpus, cfg.n);
  TransitionBuffer buffer(cfg.replay_capacity);
  std::size_t since_replay = 0;

  for (int episode = 1; episode <= cfg.episodes_total; ++episode) {
    const EncodedTree& tree = corpus.trees[eligible[uniform_index(rng, eligible.size())]];
    auto [state, first] = env::reset(*tree.tree, cfg.n, cfg.k);
    text::BowVector bow = tree.bows[0];
    auto s = features(corpus, bow, state.t_now());
    auto b = state.terminal() ? std::vector<Action>{} : candidates(*s, tree, state.candidates());

    EpisodeLog row;
    row.episode = episode;
    while (!state.terminal()) {
      const auto values = learner.values(*s, tree, b);
      const auto pick = select_action(values, cfg.epsilon, rng);
      Action action = b[pick.index];
      const auto outcome = env::step_nodes(state, action);
      for (int node : action) bow.merge(tree.bows[static_cast<std::size_t>(node)]);
      auto next = features(corpus, bow, state.t_now());
      auto next_b = outcome.terminal ? std::vector<Action>{} : candidates(*next, tree, state.candidates());

      Transition t;
      t.state = s;
      t.tree = &tree;
      t.action = std::move(action);
      t.reward = cfg.reward_scale * static_cast<double>(outcome.reward);
      t.next_state = next;
      t.next_candidates = next_b;
      t.terminal = outcome.terminal;
      buffer.push(std::move(t));
      ++since_replay;

      row.total_reward += static_cast<double>(outcome.reward);
      ++row.steps;
      s = std::move(next);
      b = std::move(next_b);
    }

    if (episode % cfg.episodes_per_replay == 0 || episode == cfg.episodes_total) {
      const auto updates = static_cast<std::size_t>(
          std::ceil(cfg.replay_passes * static_cast<double>(since_replay) / static_cast<double>(cfg.batch)));
      double loss = 0.0;
      std::size_t done = 0;
      for (std::size_t u = 0; u < updates; ++u) {
        const auto r = replay_update(buffer, learner, cfg.batch, cfg.gamma, cfg.eta, rng);
        if (r.skipped) break;
        loss += r.mean_squared_td_error;
        ++done;
      }
      if (done > 0) row.mean_td_error = loss / static_cast<double>(done);
      since_replay = 0;
    }
    if (log) log(row);
  }
}

}  // namespace

std::string to_string(SearchMode mode) {
  switch (mode) {
    case SearchMode::kRandomSubsample: return "random_subsample";
    case SearchMode::kFullSumOnly: return "full_sum_only";
    case SearchMode::kTwoStage: return "two_stage";
  }
  return "two_stage";
}

SearchMode parse_search_mode(std::string_view text) {
  for (auto m : {SearchMode::kRandomSubsample, SearchMode::kFullSumOnly, SearchMode::kTwoStage}) {
    if (to_string(m) == text) return m;
  }
  throw ConfigError("unknown search mode '" + std::string(text) + "'");
}

void AgentConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("agent config: " + what);
  };
  require(n >= 1, "N must be >= 1");
  require(k >= 1 && k <= n, "K must satisfy 1 <= K <= N");
  require(m >= 1 && m <= binomial(n, k), "m must satisfy 1 <= m <= C(N, K)");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must lie in [0, 1]");
  require(std::isfinite(eta) && eta >= 0.0, "eta must be finite and >= 0");
  require(batch >= 1, "batch must be >= 1");
  require(replay_capacity >= 1, "replay_capacity must be >= 1");
  require(episodes_per_replay >= 1, "episodes_per_replay must be >= 1");
  require(episodes_total >= 0, "episodes_total must be >= 0");
  require(replay_passes > 0.0 && std::isfinite(replay_passes), "replay_passes must be > 0");
  require(reward_scale > 0.0 && std::isfinite(reward_scale), "reward_scale must be > 0");
}

ReplayResult replay_update(const TransitionBuffer& buffer, ValueModel& model, std::size_t batch,
                           double gamma, double eta, Rng& rng) {
  if (batch == 0 || buffer.size() < batch) return {true, 0.0};
  const double weight = 1.0 / static_cast<double>(batch);
  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const Transition& t = buffer.at(uniform_index(rng, buffer.size()));
    std::vector<double> next;
    if (!t.terminal) next = model.values(*t.next_state, *t.tree, t.next_candidates);
    const double y = td_target(t.reward, next, gamma, t.terminal);
    total += model.add_sample(*t.state, *t.tree, t.action, y, weight);
  }
  model.apply(eta);
  return {false, total * weight};
}

std::vector<Action> candidates_from(std::span<const int> window, std::span<const ScoredAction> scored) {
  std::vector<Action> out;
  out.reserve(scored.size());
  for (const auto& s : scored) {
    Action a;
    for (int i : s.members) a.push_back(window[static_cast<std::size_t>(i)]);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Action> candidates_from(std::span<const int> window,
                                    std::span<const std::vector<int>> subsets) {
  std::vector<Action> out;
  out.reserve(subsets.size());
  for (const auto& s : subsets) {
    Action a;
    for (int i : s) a.push_back(window[static_cast<std::size_t>(i)]);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<ScoredAction> build_candidates(SumModel& q1, const qnet::StateFeatures& s,
                                           const EncodedTree& tree, std::span<const int> window,
                                           int k, std::size_t m, CandidateStats* stats) {
  const auto q = q1.sub_action_values(s, tree, window);
  const int n = static_cast<int>(window.size());
  const bool enumerate = binomial(n, k) <= kEnumerationLimit;
  if (stats) {
    stats->q0_evaluations += q.size();
    if (enumerate) stats->subset_sums += binomial(n, k);
  }
  return enumerate ? top_m_actions(q, k, m) : top_m_best_first(q, k, m);
}

void train_phase1(const Corpus& corpus, const AgentConfig& cfg, SumModel& q0, const LogSink& log) {
  cfg.validate();
  if (cfg.k != 1) throw ConfigError("phase 1 trains on single-comment actions (K=1)");
  Rng rng(derive_seed(cfg.seed, 0x70683131));
  const std::size_t m = std::min<std::size_t>(cfg.m, static_cast<std::size_t>(cfg.n));
  CandidateFn gen = [&](const qnet::StateFeatures& s, const EncodedTree& tree, std::span<const int> window) {
    const auto scored = build_candidates(q0, s, tree, window, 1, m);
    return candidates_from(window, scored);
  };
  train_loop(corpus, cfg, q0, gen, rng, log);
}

void train_phase2(const Corpus& corpus, const AgentConfig& cfg, SearchMode mode, SumModel& q1,
                  BiLstmModel& q2, const LogSink& log) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0x70683232));
  CandidateFn gen;
  switch (mode) {
    case SearchMode::kTwoStage:
      gen = [&](const qnet::StateFeatures& s, const EncodedTree& tree, std::span<const int> window) {
        const auto scored = build_candidates(q1, s, tree, window, cfg.k, cfg.m);
        return candidates_from(window, scored);
      };
      break;
    case SearchMode::kRandomSubsample:
      gen = [&](const qnet::StateFeatures&, const EncodedTree&, std::span<const int> window) {
        const auto subsets = random_subsample_candidates(static_cast<int>(window.size()), cfg.k, cfg.m, rng);
        return candidates_from(window, subsets);
      };
      break;
    case SearchMode::kFullSumOnly:
      throw ConfigError("full_sum_only acts with the transferred Q1 and has no second phase");
  }
  train_loop(corpus, cfg, q2, gen, rng, log);
}

double play_episode(const Corpus& corpus, const EncodedTree& tree, const Policy& policy, int n,
                    int k, std::size_t m, double epsilon, Rng& rng, int* steps) {
  const bool needs_q1 = policy.mode != SearchMode::kRandomSubsample;
  const bool needs_q2 = policy.mode != SearchMode::kFullSumOnly;
  if ((needs_q1 && !policy.q1) || (needs_q2 && !policy.q2)) {
    throw ConfigError("policy " + to_string(policy.mode) + " is missing a network");
  }
  auto [state, first] = env::reset(*tree.tree, n, k);
  text::BowVector bow = tree.bows[0];
  double total = 0.0;
  int count = 0;
  while (!state.terminal()) {
    const auto s = qnet::make_state_features(*corpus.encoder, bow, state.t_now(), corpus.store);
    const auto window = state.candidates();
    std::vector<Action> b;
    std::vector<double> values;
    switch (policy.mode) {
      case SearchMode::kTwoStage: {
        const auto scored = build_candidates(*policy.q1, s, tree, window, k, m);
        b = candidates_from(window, scored);
        values = policy.q2->values(s, tree, b);
        break;
      }
      case SearchMode::kRandomSubsample: {
        const auto subsets = random_subsample_candidates(static_cast<int>(window.size()), k, m, rng);
        b = candidates_from(window, subsets);
        values = policy.q2->values(s, tree, b);
        break;
      }
      case SearchMode::kFullSumOnly: {
        const auto scored = build_candidates(*policy.q1, s, tree, window, k,
                                             binomial(static_cast<int>(window.size()), k));
        b = candidates_from(window, scored);
        for (const auto& a : scored) values.push_back(a.value);
        break;
      }
    }
    const auto pick = select_action(values, epsilon, rng);
    const Action& action = b[pick.index];
    total += static_cast<double>(env::step_nodes(state, action).reward);
    for (int node : action) bow.merge(tree.bows[static_cast<std::size_t>(node)]);
    ++count;
  }
  if (steps) *steps = count;
  return total;
}

std::vector<double> evaluate(const Corpus& corpus, const Policy& policy, int n, int k,
                             std::size_t m, double epsilon, int episodes, std::uint64_t seed) {
  const auto eligible = eligible_trees(corpus, n);
  Rng rng(derive_seed(seed, 0x6576616c));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(episodes, 0)));
  for (int e = 0; e < episodes; ++e) {
    const auto& tree = corpus.trees[eligible[static_cast<std::size_t>(e) % eligible.size()]];
    out.push_back(play_episode(corpus, tree, policy, n, k, m, epsilon, rng));
  }
  return out;
}

std::vector<double> evaluate_random(const Corpus& corpus, int n, int k, int episodes,
                                    std::uint64_t seed) {
  const auto eligible = eligible_trees(corpus, n);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(episodes, 0)));
  for (int e = 0; e < episodes; ++e) {
    const auto& tree = corpus.trees[eligible[static_cast<std::size_t>(e) % eligible.size()]];
    out.push_back(static_cast<double>(
        env::random_rollout(*tree.tree, n, k, derive_seed(seed, static_cast<std::uint64_t>(e)))));
  }
  return out;
}

void write_log_header(std::ostream& out) { out << "run,episode,steps,total_reward,mean_td_error\n"; }

void write_log_row(std::ostream& out, int run, const EpisodeLog& row) {
  out << run << ',' << row.episode << ',' << row.steps << ',' << number(row.total_reward) << ',';
  if (row.mean_td_error) out << number(*row.mean_td_error);
  out << '\n';
}

}  // namespace threadtrack::agent
