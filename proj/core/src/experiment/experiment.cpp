#include "threadtrack/experiment/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "threadtrack/agent/search.hpp"
#include "threadtrack/env/bounds.hpp"
#include "threadtrack/env/episode.hpp"
#include "threadtrack/error.hpp"
#include "threadtrack/knowledge/synthetic.hpp"
#include "threadtrack/random.hpp"

namespace threadtrack::experiment {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t kTagInitQ0 = 1;
constexpr std::uint64_t kTagInitQ2 = 2;
constexpr std::uint64_t kTagPhase2 = 3;
constexpr std::uint64_t kTagEval = 4;

std::string number(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json agent_json(const agent::AgentConfig& a) {
  return {{"n", a.n},
          {"k", a.k},
          {"m", a.m},
          {"gamma", a.gamma},
          {"epsilon", a.epsilon},
          {"eta", a.eta},
          {"batch", a.batch},
          {"replay_capacity", a.replay_capacity},
          {"episodes_per_replay", a.episodes_per_replay},
          {"episodes", a.episodes_total},
          {"replay_passes", a.replay_passes},
          {"reward_scale", a.reward_scale}};
}

agent::AgentConfig parse_agent(const json& j) {
  if (!j.is_object()) throw ConfigError("run config: 'agent' must be an object");
  agent::AgentConfig a;
  for (const auto& [k, v] : j.items()) {
    if (k == "n") a.n = v.get<int>();
    else if (k == "k") a.k = v.get<int>();
    else if (k == "m") a.m = v.get<std::size_t>();
    else if (k == "gamma") a.gamma = v.get<double>();
    else if (k == "epsilon") a.epsilon = v.get<double>();
    else if (k == "eta") a.eta = v.get<double>();
    else if (k == "batch") a.batch = v.get<std::size_t>();
    else if (k == "replay_capacity") a.replay_capacity = v.get<std::size_t>();
    else if (k == "episodes_per_replay") a.episodes_per_replay = v.get<int>();
    else if (k == "episodes") a.episodes_total = v.get<int>();
    else if (k == "replay_passes") a.replay_passes = v.get<double>();
    else if (k == "reward_scale") a.reward_scale = v.get<double>();
    else throw ConfigError("run config: unknown agent key '" + k + "'");
  }
  return a;
}

json config_json(const RunConfig& c) {
  json j = {{"subcommand", c.subcommand},
            {"corpus", c.corpus.string()},
            {"knowledge_corpus", c.knowledge_corpus.string()},
            {"generator", json::parse(env::to_json(c.generator))},
            {"agent", agent_json(c.agent)},
            {"knowledge_mode", knowledge::to_string(c.knowledge)},
            {"search_mode", agent::to_string(c.search)},
            {"runs", c.runs},
            {"out", c.out_dir.string()},
            {"seed", c.seed},
            {"phase1_episodes", c.phase1_episodes},
            {"phase1_replay_passes",
             c.phase1_replay_passes ? json(*c.phase1_replay_passes) : json(nullptr)},
            {"eval_episodes", c.eval_episodes},
            {"eval_epsilon", c.eval_epsilon},
            {"workers", c.workers},
            {"warm_start", c.warm_start}};
  return j;
}

void flatten(const json& j, const std::string& prefix, std::vector<std::string>& out) {
  for (const auto& [k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      flatten(v, key, out);
    } else {
      out.push_back(key + "=" + (v.is_string() ? v.get<std::string>() : v.dump()));
    }
  }
}

// Config header for CSV files. Subcommand, output location and worker count
// do not influence any number and are left out.
void write_config_header(std::ostream& out, const RunConfig& c) {
  json j = config_json(c);
  j.erase("subcommand");
  j.erase("out");
  j.erase("workers");
  std::vector<std::string> lines;
  flatten(j, "", lines);
  for (const auto& l : lines) out << "# " << l << '\n';
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

qnet::NetShape shape_for(const LoadedCorpus& corpus) {
  qnet::NetShape s;
  s.vocab = corpus.encoder->vocab.size();
  return s;
}

std::string phase1_key(const RunConfig& cfg, std::uint64_t seed) {
  json j = agent_json(cfg.agent);
  j.erase("k");
  j.erase("episodes");
  j["phase1_episodes"] = cfg.phase1_episodes;
  j["replay_passes"] = cfg.phase1_replay_passes.value_or(cfg.agent.replay_passes);
  j["knowledge_mode"] = knowledge::to_string(cfg.knowledge);
  j["seed"] = seed;
  return j.dump();
}

void evaluate_run(const RunConfig& cfg, const agent::Corpus& view, const agent::Policy& policy,
                  RunResult& r) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t eval_seed = derive_seed(r.seed, kTagEval);
  r.eval_rewards = agent::evaluate(view, policy, cfg.agent.n, cfg.agent.k, cfg.agent.m,
                                   cfg.eval_epsilon, cfg.eval_episodes, eval_seed);
  const auto random =
      agent::evaluate_random(view, cfg.agent.n, cfg.agent.k, cfg.eval_episodes, eval_seed);
  r.mean_reward = mean_of(r.eval_rewards);
  r.random_mean_reward = mean_of(random);
  r.eval_seconds = seconds_since(t0);
}

}  // namespace

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("run config: " + msg);
  };
  require(runs >= 1, "runs must be >= 1");
  require(workers >= 1, "workers must be >= 1");
  require(phase1_episodes >= 1, "phase1_episodes must be >= 1");
  require(eval_episodes >= 1, "eval_episodes must be >= 1");
  require(!phase1_replay_passes || *phase1_replay_passes > 0.0,
          "phase1_replay_passes must be positive");
  require(eval_epsilon >= 0.0 && eval_epsilon <= 1.0, "eval_epsilon must lie in [0, 1]");
  require(!(knowledge_corpus.empty() && !corpus.empty() && knowledge != KnowledgeMode::kNone),
          "knowledge mode " + knowledge::to_string(knowledge) +
              " needs a knowledge corpus when the tree corpus is a file");
  agent.validate();
  if (corpus.empty()) generator.validate();
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("run config: expected a JSON object");
  RunConfig c;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "subcommand") c.subcommand = v.get<std::string>();
      else if (k == "corpus") c.corpus = v.get<std::string>();
      else if (k == "knowledge_corpus") c.knowledge_corpus = v.get<std::string>();
      else if (k == "generator") c.generator = env::parse_generator_config(v.dump());
      else if (k == "agent") c.agent = parse_agent(v);
      else if (k == "knowledge_mode") c.knowledge = knowledge::parse_knowledge_mode(v.get<std::string>());
      else if (k == "search_mode") c.search = agent::parse_search_mode(v.get<std::string>());
      else if (k == "runs") c.runs = v.get<int>();
      else if (k == "out") c.out_dir = v.get<std::string>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "phase1_episodes") c.phase1_episodes = v.get<int>();
      else if (k == "phase1_replay_passes") {
        if (v.is_null()) c.phase1_replay_passes.reset();
        else c.phase1_replay_passes = v.get<double>();
      }
      else if (k == "eval_episodes") c.eval_episodes = v.get<int>();
      else if (k == "eval_epsilon") c.eval_epsilon = v.get<double>();
      else if (k == "workers") c.workers = v.get<int>();
      else if (k == "warm_start") c.warm_start = v.get<bool>();
      else throw ConfigError("run config: unknown key '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open run config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_json(const RunConfig& cfg) { return config_json(cfg).dump(2); }

agent::Corpus LoadedCorpus::view(bool with_knowledge) const {
  if (with_knowledge && !store) throw ConfigError("knowledge requested but no knowledge corpus is loaded");
  return {encoded, encoder.get(), with_knowledge ? store.get() : nullptr};
}

std::shared_ptr<const LoadedCorpus> resolve_corpus(const RunConfig& cfg) {
  auto c = std::make_shared<LoadedCorpus>();
  std::vector<knowledge::KnowledgeRecord> records;
  if (cfg.corpus.empty()) {
    c->trees = env::generate_synthetic(cfg.generator);
    records = knowledge::generate_knowledge(cfg.generator);
  } else {
    c->trees = env::load_trees(cfg.corpus);
    if (!cfg.knowledge_corpus.empty()) records = knowledge::load_knowledge(cfg.knowledge_corpus);
  }
  std::vector<std::string> texts;
  for (const auto& t : c->trees) {
    for (std::size_t i = 0; i < t.size(); ++i) texts.push_back(t.node(static_cast<int>(i)).text);
  }
  c->encoder = std::make_shared<text::TextEncoder>(text::TextEncoder::fit(texts));
  if (!records.empty()) {
    c->store = std::make_unique<knowledge::KnowledgeStore>(
        knowledge::build_store(c->encoder, std::move(records)));
  }
  c->encoded = agent::encode_trees(c->trees, *c->encoder);
  for (const auto& t : c->trees) {
    if (t.comment_count() >= static_cast<std::size_t>(cfg.agent.n)) ++c->eligible;
  }
  if (c->eligible == 0) {
    throw ConfigError("corpus has no tree with at least N = " + std::to_string(cfg.agent.n) +
                      " comments");
  }
  return c;
}

std::uint64_t run_seed(const RunConfig& cfg, int run) {
  return derive_seed(cfg.seed, static_cast<std::uint64_t>(run));
}

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::shared_ptr<const Phase1Result> Phase1Cache::find(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : it->second;
}

void Phase1Cache::put(const std::string& key, std::shared_ptr<const Phase1Result> result) {
  std::lock_guard lock(mu_);
  entries_.emplace(key, std::move(result));
}

RunResult run_once(const RunConfig& cfg, const LoadedCorpus& corpus, int run, Phase1Cache* cache) {
  RunResult r;
  r.run = run;
  r.seed = run_seed(cfg, run);
  const bool with_knowledge = cfg.knowledge != KnowledgeMode::kNone;
  const agent::Corpus view = corpus.view(with_knowledge);
  const auto shape = shape_for(corpus);

  // Phase 1: Q0 on the K = 1 task.
  agent::AgentConfig a1 = cfg.agent;
  a1.k = 1;
  a1.m = std::min<std::size_t>(a1.m, static_cast<std::size_t>(a1.n));
  a1.episodes_total = cfg.phase1_episodes;
  a1.replay_passes = cfg.phase1_replay_passes.value_or(cfg.agent.replay_passes);
  a1.seed = r.seed;
  auto t0 = std::chrono::steady_clock::now();
  const std::string key = phase1_key(cfg, r.seed);
  std::shared_ptr<const Phase1Result> phase1 = cache ? cache->find(key) : nullptr;
  if (!phase1) {
    Rng init(derive_seed(r.seed, kTagInitQ0));
    agent::SumModel q0(qnet::make_drrn(shape, cfg.knowledge, init), view.store);
    auto fresh = std::make_shared<Phase1Result>();
    agent::train_phase1(view, a1, q0, [&](const agent::EpisodeLog& l) { fresh->log.push_back(l); });
    fresh->q0 = q0.params();
    phase1 = fresh;
    if (cache) cache->put(key, phase1);
  }
  r.phase1_log = phase1->log;
  const qnet::DrrnParams* q0_params = &phase1->q0;
  r.phase1_seconds = seconds_since(t0);

  agent::SumModel q1(qnet::transfer_q0_to_q1(*q0_params), view.store);
  std::unique_ptr<agent::BiLstmModel> q2;
  agent::Policy policy{cfg.search, &q1, nullptr};

  t0 = std::chrono::steady_clock::now();
  if (cfg.search != SearchMode::kFullSumOnly) {
    Rng init(derive_seed(r.seed, kTagInitQ2));
    auto p2 = qnet::make_drrn_bilstm(shape, cfg.knowledge, init);
    if (cfg.warm_start) qnet::warm_start_from(p2, *q0_params);
    q2 = std::make_unique<agent::BiLstmModel>(std::move(p2), view.store);
    agent::AgentConfig a2 = cfg.agent;
    a2.seed = derive_seed(r.seed, kTagPhase2);
    agent::train_phase2(view, a2, cfg.search, q1, *q2,
                        [&](const agent::EpisodeLog& l) { r.phase2_log.push_back(l); });
    policy.q2 = q2.get();
  }
  r.phase2_seconds = seconds_since(t0);

  r.q0 = phase1;
  if (q2) r.q2 = std::make_shared<const qnet::DrrnBiLstmParams>(q2->params());
  evaluate_run(cfg, view, policy, r);
  return r;
}

namespace {

void finish_summary(MetricsSummary& s) {
  std::vector<double> means, randoms;
  for (const auto& r : s.runs) {
    means.push_back(r.mean_reward);
    randoms.push_back(r.random_mean_reward);
  }
  s.mean = mean_of(means);
  s.std = sample_std(means);
  s.random_mean = mean_of(randoms);
  s.random_std = sample_std(randoms);
}

void write_training_logs(const RunConfig& cfg, const MetricsSummary& s) {
  {
    auto out = open_out(cfg.out_dir / "train_phase1.csv");
    write_config_header(out, cfg);
    agent::write_log_header(out);
    for (const auto& r : s.runs) {
      for (const auto& l : r.phase1_log) agent::write_log_row(out, r.run, l);
    }
  }
  {
    auto out = open_out(cfg.out_dir / "train_phase2.csv");
    write_config_header(out, cfg);
    agent::write_log_header(out);
    for (const auto& r : s.runs) {
      for (const auto& l : r.phase2_log) agent::write_log_row(out, r.run, l);
    }
  }
}

void write_results(const RunConfig& cfg, const MetricsSummary& s) {
  {
    auto out = open_out(cfg.out_dir / "eval.csv");
    write_config_header(out, cfg);
    out << "run,episode,reward\n";
    for (const auto& r : s.runs) {
      for (std::size_t e = 0; e < r.eval_rewards.size(); ++e) {
        out << r.run << ',' << e + 1 << ',' << number(r.eval_rewards[e]) << '\n';
      }
    }
  }
  {
    auto out = open_out(cfg.out_dir / "summary.csv");
    write_config_header(out, cfg);
    out << "run,seed,mean_reward,random_mean_reward\n";
    for (const auto& r : s.runs) {
      out << r.run << ',' << r.seed << ',' << number(r.mean_reward) << ','
          << number(r.random_mean_reward) << '\n';
    }
    out << "mean,," << number(s.mean) << ',' << number(s.random_mean) << '\n';
    out << "std,," << number(s.std) << ',' << number(s.random_std) << '\n';
  }
  {
    auto out = open_out(cfg.out_dir / "summary.txt");
    char line[256];
    out << s.label << '\n';
    std::snprintf(line, sizeof line, "reward   %.1f (%.1f) over %d runs x %d episodes\n", s.mean,
                  s.std, cfg.runs, cfg.eval_episodes);
    out << line;
    std::snprintf(line, sizeof line, "random   %.1f\n", s.random_mean);
    out << line;
    for (const auto& r : s.runs) {
      std::snprintf(line, sizeof line,
                    "run %d seed %llu  reward %.1f  phase1 %.1fs  phase2 %.1fs  eval %.1fs\n", r.run,
                    static_cast<unsigned long long>(r.seed), r.mean_reward, r.phase1_seconds,
                    r.phase2_seconds, r.eval_seconds);
      out << line;
    }
    for (const auto& w : s.warnings) out << "warning: " << w << '\n';
  }
}

std::filesystem::path model_path(const std::filesystem::path& dir, int run, const char* net) {
  return dir / ("run" + std::to_string(run) + "_" + net + ".json");
}

void write_models(const RunConfig& cfg, const MetricsSummary& s) {
  const auto dir = cfg.out_dir / "models";
  std::filesystem::create_directories(dir);
  for (const auto& r : s.runs) {
    if (r.q0) qnet::save_model(model_path(dir, r.run, "q0"), r.q0->q0);
    if (r.q2) qnet::save_model(model_path(dir, r.run, "q2"), *r.q2);
  }
}

MetricsSummary new_summary(const RunConfig& cfg) {
  MetricsSummary s;
  s.label = knowledge::to_string(cfg.knowledge) + "/" + agent::to_string(cfg.search) +
            "/K=" + std::to_string(cfg.agent.k);
  s.eval_episodes = cfg.eval_episodes;
  if (cfg.runs == 1) s.warnings.push_back("runs=1: std reported as 0");
  if (cfg.agent.k == 1 && cfg.search == SearchMode::kTwoStage) {
    s.warnings.push_back("two_stage with K=1 reranks single comments only");
  }
  return s;
}

}  // namespace

MetricsSummary run_experiment(const RunConfig& cfg, Phase1Cache* cache) {
  cfg.validate();
  return run_experiment(cfg, resolve_corpus(cfg), cache);
}

MetricsSummary run_experiment(const RunConfig& cfg, std::shared_ptr<const LoadedCorpus> corpus,
                              Phase1Cache* cache) {
  cfg.validate();
  MetricsSummary s = new_summary(cfg);
  std::vector<RunResult> results(static_cast<std::size_t>(cfg.runs));
  std::vector<std::exception_ptr> errors(results.size());
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < cfg.runs; i = next++) {
      try {
        results[static_cast<std::size_t>(i)] = run_once(cfg, *corpus, i, cache);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int n_threads = std::min(cfg.workers, cfg.runs);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  s.runs = std::move(results);

  finish_summary(s);
  std::filesystem::create_directories(cfg.out_dir);
  write_training_logs(cfg, s);
  write_results(cfg, s);
  write_models(cfg, s);
  return s;
}

MetricsSummary evaluate_saved(const RunConfig& cfg, const std::filesystem::path& models_dir) {
  cfg.validate();
  auto corpus = resolve_corpus(cfg);
  const agent::Corpus view = corpus->view(cfg.knowledge != KnowledgeMode::kNone);
  MetricsSummary s = new_summary(cfg);
  for (int run = 0; run < cfg.runs; ++run) {
    RunResult r;
    r.run = run;
    r.seed = run_seed(cfg, run);
    const auto q0 = qnet::load_drrn(model_path(models_dir, run, "q0"));
    if (q0.state.mode != cfg.knowledge) {
      throw ConfigError("saved model uses knowledge mode " + knowledge::to_string(q0.state.mode));
    }
    if (qnet::shape_of(q0).vocab != corpus->encoder->vocab.size()) {
      throw ConfigError("saved model vocabulary does not match the corpus");
    }
    agent::SumModel q1(qnet::transfer_q0_to_q1(q0), view.store);
    std::unique_ptr<agent::BiLstmModel> q2;
    agent::Policy policy{cfg.search, &q1, nullptr};
    if (cfg.search != SearchMode::kFullSumOnly) {
      q2 = std::make_unique<agent::BiLstmModel>(
          qnet::load_drrn_bilstm(model_path(models_dir, run, "q2")), view.store);
      policy.q2 = q2.get();
    }
    evaluate_run(cfg, view, policy, r);
    s.runs.push_back(std::move(r));
  }
  finish_summary(s);
  std::filesystem::create_directories(cfg.out_dir);
  write_results(cfg, s);
  return s;
}

std::vector<AblationCell> run_ablation(const RunConfig& cfg) {
  cfg.validate();
  const KnowledgeMode with =
      cfg.knowledge == KnowledgeMode::kNone ? KnowledgeMode::kAttention : cfg.knowledge;
  std::vector<AblationCell> cells{
      {"baseline", KnowledgeMode::kNone, SearchMode::kRandomSubsample, {}},
      {"two_stage", KnowledgeMode::kNone, SearchMode::kTwoStage, {}},
      {"knowledge", with, SearchMode::kRandomSubsample, {}},
      {"knowledge+two_stage", with, SearchMode::kTwoStage, {}},
  };
  RunConfig probe = cfg;
  probe.knowledge = with;
  probe.validate();
  auto corpus = resolve_corpus(probe);
  Phase1Cache cache;
  for (auto& cell : cells) {
    RunConfig c = cfg;
    c.knowledge = cell.knowledge;
    c.search = cell.search;
    c.out_dir = cfg.out_dir / cell.name;
    cell.summary = run_experiment(c, corpus, &cache);
  }
  std::filesystem::create_directories(cfg.out_dir);
  auto out = open_out(cfg.out_dir / "ablation.csv");
  write_config_header(out, cfg);
  out << "cell,knowledge_mode,search_mode,run,seed,mean_reward\n";
  for (const auto& cell : cells) {
    for (const auto& r : cell.summary.runs) {
      out << cell.name << ',' << knowledge::to_string(cell.knowledge) << ','
          << agent::to_string(cell.search) << ',' << r.run << ',' << r.seed << ','
          << number(r.mean_reward) << '\n';
    }
  }
  for (const auto& cell : cells) {
    out << cell.name << ',' << knowledge::to_string(cell.knowledge) << ','
        << agent::to_string(cell.search) << ",mean,," << number(cell.summary.mean) << '\n';
    out << cell.name << ',' << knowledge::to_string(cell.knowledge) << ','
        << agent::to_string(cell.search) << ",std,," << number(cell.summary.std) << '\n';
  }
  return cells;
}

namespace {

struct BenchState {
  const agent::EncodedTree* tree = nullptr;
  qnet::StateFeatures features;
  std::vector<int> window;
};

std::vector<agent::Action> to_actions(std::span<const int> window,
                                      std::span<const std::vector<int>> subsets) {
  return agent::candidates_from(window, subsets);
}

// Multiply-adds of a feed-forward pass with `nnz` non-zero inputs.
double ff_ops(const nn::FeedForwardNet& net, double nnz) {
  double ops = 0.0;
  const auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const double in = i == 0 ? nnz : static_cast<double>(layers[i].in_dim());
    ops += in * static_cast<double>(layers[i].out_dim());
  }
  return ops;
}

}  // namespace

BenchReport bench_search(const RunConfig& cfg, std::span<const int> ks, int steps) {
  cfg.validate();
  if (steps < 1) throw ConfigError("bench: steps must be >= 1");
  const int n = cfg.agent.n;
  for (int k : ks) {
    if (k < 1 || k > n) throw ConfigError("bench: K must lie in [1, N]");
  }
  auto corpus = resolve_corpus(cfg);
  const bool with_knowledge = cfg.knowledge != KnowledgeMode::kNone;
  const agent::Corpus view = corpus->view(with_knowledge);
  const auto shape = shape_for(*corpus);
  Rng rng(derive_seed(cfg.seed, 0x62656e63));
  agent::SumModel q1(qnet::make_drrn(shape, cfg.knowledge, rng), view.store);
  agent::BiLstmModel q2(qnet::make_drrn_bilstm(shape, cfg.knowledge, rng), view.store);

  // States from uniformly random play (K = 1) over eligible trees.
  std::vector<BenchState> states;
  std::vector<const agent::EncodedTree*> eligible;
  for (const auto& t : corpus->encoded) {
    if (t.tree->comment_count() >= static_cast<std::size_t>(n)) eligible.push_back(&t);
  }
  double nnz_total = 0.0;
  std::size_t nnz_count = 0;
  double state_nnz = 0.0;
  while (static_cast<int>(states.size()) < steps) {
    const auto* tree = eligible[uniform_index(rng, eligible.size())];
    auto [st, out] = env::reset(*tree->tree, n, 1);
    text::BowVector bow = tree->bows[0];
    while (!st.terminal() && static_cast<int>(states.size()) < steps) {
      BenchState b;
      b.tree = tree;
      b.window.assign(st.candidates().begin(), st.candidates().end());
      b.features = qnet::make_state_features(*view.encoder, bow, st.t_now(), view.store);
      state_nnz += static_cast<double>(bow.counts().nnz());
      for (int c : b.window) {
        nnz_total += static_cast<double>(tree->bows[static_cast<std::size_t>(c)].counts().nnz());
        ++nnz_count;
      }
      states.push_back(std::move(b));
      const int pick = st.candidates()[uniform_index(rng, st.candidates().size())];
      bow.merge(tree->bows[static_cast<std::size_t>(pick)]);
      const int action[] = {pick};
      env::step_nodes(st, action);
    }
  }
  const double nnz = nnz_count ? nnz_total / static_cast<double>(nnz_count) : 0.0;

  // Warm the document cache so every strategy sees the same state cost.
  for (const auto& b : states) q1.sub_action_values(b.features, *b.tree, b.window);

  const auto& p2 = q2.params();
  const double e = static_cast<double>(shape.embed);
  const double h = static_cast<double>(p2.bilstm.hidden_dim());
  // Each window comment is embedded and projected once per step; every
  // candidate then pays the recurrent part per member plus the output layer.
  const double recurrent_step = 2.0 * 4.0 * h * h;
  const double per_comment = ff_ops(p2.comment_net, nnz) + 2.0 * 4.0 * h * e;
  const double per_action_fixed = 2.0 * h * e + e;
  const double state_ops =
      ff_ops(p2.state.state_net, state_nnz / static_cast<double>(states.size()));
  const double step_ops = state_ops + static_cast<double>(n) * per_comment;

  BenchReport report;
  report.steps = steps;
  constexpr int kRepeats = 5;
  auto time_us = [&](auto&& body) {
    double best = 0.0;
    for (int rep = 0; rep < kRepeats; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      for (const auto& b : states) body(b);
      const double us = seconds_since(t0) * 1e6 / static_cast<double>(states.size());
      best = rep == 0 ? us : std::min(best, us);
    }
    return best;
  };
  volatile double sink = 0.0;
  for (int k : ks) {
    BenchRow row;
    row.k = k;
    row.subsets = agent::binomial(n, k);
    const std::size_t m = std::min<std::size_t>(cfg.agent.m, row.subsets);
    Rng sample_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(k)));
    const auto full = agent::all_subsets(n, k);
    row.random_subsample_us = time_us([&](const BenchState& b) {
      const auto subsets = agent::random_subsample_candidates(n, k, m, sample_rng);
      const auto actions = to_actions(b.window, subsets);
      const auto v = q2.values(b.features, *b.tree, actions);
      sink = sink + v.front();
    });
    row.two_stage_us = time_us([&](const BenchState& b) {
      const auto scored = agent::build_candidates(q1, b.features, *b.tree, b.window, k, m);
      const auto actions = agent::candidates_from(b.window, scored);
      const auto v = q2.values(b.features, *b.tree, actions);
      sink = sink + v.front();
    });
    row.full_space_us = time_us([&](const BenchState& b) {
      const auto actions = to_actions(b.window, full);
      const auto v = q2.values(b.features, *b.tree, actions);
      sink = sink + v.front();
    });
    row.model_ops = step_ops + static_cast<double>(row.subsets) *
                               (static_cast<double>(k) * recurrent_step + per_action_fixed);
    report.rows.push_back(row);
  }
  // One rate for all K: least squares through the origin.
  double num = 0.0, den = 0.0;
  for (const auto& r : report.rows) {
    num += r.full_space_us * r.model_ops;
    den += r.model_ops * r.model_ops;
  }
  report.us_per_op = den > 0.0 ? num / den : 0.0;
  for (auto& r : report.rows) r.predicted_full_space_us = r.model_ops * report.us_per_op;
  return report;
}

void write_bench(std::ostream& out, const BenchReport& report) {
  out << "k,subsets,random_subsample_us,two_stage_us,full_space_us,full_over_two_stage,"
         "model_ops,predicted_full_space_us,model_ratio\n";
  for (const auto& r : report.rows) {
    out << r.k << ',' << r.subsets << ',' << number(r.random_subsample_us) << ','
        << number(r.two_stage_us) << ',' << number(r.full_space_us) << ','
        << number(r.full_space_us / r.two_stage_us) << ',' << number(r.model_ops) << ','
        << number(r.predicted_full_space_us) << ','
        << number(r.full_space_us / r.predicted_full_space_us) << '\n';
  }
}

std::vector<BoundsRow> report_bounds(std::span<const env::DiscussionTree> trees, int n, int k,
                                     int random_episodes, std::uint64_t seed,
                                     std::size_t max_leaves) {
  if (random_episodes < 1) throw ConfigError("bounds: random_episodes must be >= 1");
  std::vector<BoundsRow> rows;
  for (std::size_t t = 0; t < trees.size(); ++t) {
    const auto& tree = trees[t];
    BoundsRow row;
    row.tree_id = tree.node(0).id;
    row.comments = tree.size() - 1;
    try {
      row.oracle = env::oracle_upper_bound(tree, k, max_leaves);
    } catch (const ConfigError&) {
      row.oracle.reset();
    }
    double total = 0.0;
    for (int e = 0; e < random_episodes; ++e) {
      total += static_cast<double>(
          env::random_rollout(tree, n, k, derive_seed(seed, t * 1000003ULL + static_cast<std::uint64_t>(e))));
    }
    row.random_mean = total / random_episodes;
    rows.push_back(row);
  }
  return rows;
}

void write_bounds(std::ostream& out, std::span<const BoundsRow> rows) {
  out << "tree_id,comments,oracle,random_mean\n";
  for (const auto& r : rows) {
    out << r.tree_id << ',' << r.comments << ',';
    if (r.oracle) out << *r.oracle;
    out << ',' << number(r.random_mean) << '\n';
  }
}

}  // namespace threadtrack::experiment
