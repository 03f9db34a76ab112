// threadtrack command-line driver.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "threadtrack/env/synthetic.hpp"
#include "threadtrack/error.hpp"
#include "threadtrack/experiment/experiment.hpp"
#include "threadtrack/knowledge/store.hpp"
#include "threadtrack/knowledge/synthetic.hpp"

namespace fs = std::filesystem;
namespace tt = threadtrack;
namespace ex = threadtrack::experiment;

namespace {

// Flags shared by every subcommand. Unset optionals leave the config value.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> episodes;
  std::optional<int> runs;
  std::optional<std::string> corpus;
  std::optional<std::string> knowledge_corpus;
  std::optional<std::string> knowledge_mode;
  std::optional<std::string> search_mode;
  std::optional<int> n, k;
  std::optional<std::size_t> m;
  std::optional<double> eta, gamma, epsilon, replay_passes, reward_scale, eval_epsilon;
  std::optional<std::size_t> batch;
  std::optional<int> phase1_episodes, eval_episodes, workers;
  std::optional<double> phase1_replay_passes;
  bool no_warm_start = false;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON run config")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "Base seed");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--episodes", o.episodes, "Training episodes of the K-subset phase");
  app->add_option("--runs", o.runs, "Independent seeded runs");
  app->add_option("--corpus", o.corpus, "Tree corpus (JSONL file or directory)");
  app->add_option("--knowledge-corpus", o.knowledge_corpus, "Knowledge corpus (JSONL)");
  app->add_option("--knowledge-mode", o.knowledge_mode,
                  "none, rule:past_day, rule:past_week, rule:top10_similar, "
                  "rule:top10_popular or attention");
  app->add_option("--search-mode", o.search_mode, "random_subsample, full_sum_only or two_stage");
  app->add_option("--n", o.n, "Candidates per step");
  app->add_option("--k", o.k, "Comments tracked per step");
  app->add_option("--m", o.m, "Candidate actions per step");
  app->add_option("--eta", o.eta, "Learning rate");
  app->add_option("--gamma", o.gamma, "Discount");
  app->add_option("--epsilon", o.epsilon, "Exploration rate while training");
  app->add_option("--batch", o.batch, "Minibatch size");
  app->add_option("--replay-passes", o.replay_passes, "Replay updates per new transition");
  app->add_option("--reward-scale", o.reward_scale, "Reward multiplier inside TD targets");
  app->add_option("--phase1-episodes", o.phase1_episodes, "K = 1 pre-training episodes");
  app->add_option("--phase1-replay-passes", o.phase1_replay_passes,
                  "Replay passes during pre-training");
  app->add_option("--eval-episodes", o.eval_episodes, "Evaluation episodes per run");
  app->add_option("--eval-epsilon", o.eval_epsilon, "Exploration rate at evaluation");
  app->add_option("--workers", o.workers, "Parallel runs");
  app->add_flag("--no-warm-start", o.no_warm_start, "Start Q2 from random weights");
}

ex::RunConfig build_config(const Overrides& o, const std::string& subcommand) {
  ex::RunConfig c = o.config.empty() ? ex::RunConfig{} : ex::load_run_config(o.config);
  c.subcommand = subcommand;
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out_dir = *o.out;
  if (o.episodes) c.agent.episodes_total = *o.episodes;
  if (o.runs) c.runs = *o.runs;
  if (o.corpus) c.corpus = *o.corpus;
  if (o.knowledge_corpus) c.knowledge_corpus = *o.knowledge_corpus;
  if (o.knowledge_mode) c.knowledge = tt::knowledge::parse_knowledge_mode(*o.knowledge_mode);
  if (o.search_mode) c.search = tt::agent::parse_search_mode(*o.search_mode);
  if (o.n) c.agent.n = *o.n;
  if (o.k) c.agent.k = *o.k;
  if (o.m) c.agent.m = *o.m;
  if (o.eta) c.agent.eta = *o.eta;
  if (o.gamma) c.agent.gamma = *o.gamma;
  if (o.epsilon) c.agent.epsilon = *o.epsilon;
  if (o.batch) c.agent.batch = *o.batch;
  if (o.replay_passes) c.agent.replay_passes = *o.replay_passes;
  if (o.reward_scale) c.agent.reward_scale = *o.reward_scale;
  if (o.phase1_episodes) c.phase1_episodes = *o.phase1_episodes;
  if (o.phase1_replay_passes) c.phase1_replay_passes = *o.phase1_replay_passes;
  if (o.eval_episodes) c.eval_episodes = *o.eval_episodes;
  if (o.eval_epsilon) c.eval_epsilon = *o.eval_epsilon;
  if (o.workers) c.workers = *o.workers;
  if (o.no_warm_start) c.warm_start = false;
  c.validate();
  return c;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tt::Error("cannot write " + path.string());
  return out;
}

void print_summary(const ex::MetricsSummary& s) {
  std::printf("%-32s %8.1f (%.1f)   random %.1f\n", s.label.c_str(), s.mean, s.std, s.random_mean);
  for (const auto& w : s.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

int synth_gen(const Overrides& o) {
  ex::RunConfig c = build_config(o, "synth-gen");
  if (o.seed) c.generator.seed = *o.seed;
  const fs::path out = c.out_dir;
  const auto trees = tt::env::generate_synthetic(c.generator);
  const auto records = tt::knowledge::generate_knowledge(c.generator);
  {
    auto f = open_out(out / "trees.jsonl");
    tt::env::write_trees(f, trees);
  }
  {
    auto f = open_out(out / "knowledge.jsonl");
    tt::knowledge::write_knowledge(f, records);
  }
  {
    auto f = open_out(out / "generator.json");
    f << tt::env::to_json(c.generator) << '\n';
  }
  std::printf("wrote %zu trees and %zu knowledge records to %s\n", trees.size(), records.size(),
              out.string().c_str());
  return 0;
}

int train(const Overrides& o) {
  const auto cfg = build_config(o, "train");
  print_summary(ex::run_experiment(cfg));
  std::printf("outputs in %s\n", cfg.out_dir.string().c_str());
  return 0;
}

int eval(const Overrides& o, const std::string& models) {
  const auto cfg = build_config(o, "eval");
  print_summary(ex::evaluate_saved(cfg, models));
  return 0;
}

int ablate(const Overrides& o) {
  const auto cfg = build_config(o, "ablate");
  for (const auto& cell : ex::run_ablation(cfg)) print_summary(cell.summary);
  std::printf("table in %s\n", (cfg.out_dir / "ablation.csv").string().c_str());
  return 0;
}

int bench(const Overrides& o, const std::vector<int>& ks, int steps) {
  const auto cfg = build_config(o, "bench");
  const auto report = ex::bench_search(cfg, ks, steps);
  ex::write_bench(std::cout, report);
  auto f = open_out(cfg.out_dir / "bench.csv");
  ex::write_bench(f, report);
  return 0;
}

int bounds(const Overrides& o, int random_episodes, std::size_t max_leaves) {
  const auto cfg = build_config(o, "bounds");
  const auto corpus = ex::resolve_corpus(cfg);
  const auto rows = ex::report_bounds(corpus->trees, cfg.agent.n, cfg.agent.k, random_episodes,
                                      cfg.seed, max_leaves);
  double oracle_sum = 0.0, random_sum = 0.0;
  std::size_t counted = 0;
  for (const auto& r : rows) {
    if (!r.oracle) {
      std::fprintf(stderr, "notice: tree %lld skipped by the oracle leaf guard\n",
                   static_cast<long long>(r.tree_id));
      continue;
    }
    oracle_sum += static_cast<double>(*r.oracle);
    random_sum += r.random_mean;
    ++counted;
  }
  auto f = open_out(cfg.out_dir / "bounds.csv");
  ex::write_bounds(f, rows);
  if (counted > 0) {
    std::printf("random %.1f   upper bound %.1f   (%zu trees)\n", random_sum / counted,
                oracle_sum / counted, counted);
  }
  return 0;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const tt::ConfigError*>(&e)) return "config";
  if (dynamic_cast<const tt::LoadError*>(&e)) return "load";
  if (dynamic_cast<const tt::ActionError*>(&e)) return "action";
  if (dynamic_cast<const tt::Error*>(&e)) return "runtime";
  return "internal";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Comment tracking with two-stage Q-learning"};
  app.require_subcommand(1);

  Overrides o;
  std::string models;
  std::vector<int> ks{2, 3, 4, 5};
  int steps = 200;
  int random_episodes = 100;
  std::size_t max_leaves = tt::env::kDefaultOracleLeafLimit;

  auto* gen = app.add_subcommand("synth-gen", "Write a synthetic tree and knowledge corpus");
  auto* tr = app.add_subcommand("train", "Train and evaluate over several seeded runs");
  auto* ev = app.add_subcommand("eval", "Evaluate saved models");
  auto* ab = app.add_subcommand("ablate", "Knowledge x two-stage ablation");
  auto* be = app.add_subcommand("bench", "Time candidate evaluation per search strategy");
  auto* bo = app.add_subcommand("bounds", "Oracle upper bound and random baseline per tree");
  for (auto* sub : {gen, tr, ev, ab, be, bo}) add_common(sub, o);
  ev->add_option("--models", models, "Directory with run<r>_q0.json / run<r>_q2.json")->required();
  be->add_option("--ks", ks, "K values")->delimiter(',');
  be->add_option("--steps", steps, "Sampled states per K");
  bo->add_option("--random-episodes", random_episodes, "Random rollouts per tree");
  bo->add_option("--max-leaves", max_leaves, "Oracle leaf guard");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    nlohmann::json line = {{"error", "usage"}, {"message", e.what()}};
    std::cerr << line.dump() << '\n';
    return 2;
  }

  try {
    if (gen->parsed()) return synth_gen(o);
    if (tr->parsed()) return train(o);
    if (ev->parsed()) return eval(o, models);
    if (ab->parsed()) return ablate(o);
    if (be->parsed()) return bench(o, ks, steps);
    if (bo->parsed()) return bounds(o, random_episodes, max_leaves);
  } catch (const std::exception& e) {
    nlohmann::json line = {{"error", error_kind(e)}, {"message", e.what()}};
    if (const auto* le = dynamic_cast<const tt::LoadError*>(&e); le && le->line() > 0) {
      line["line"] = le->line();
    }
    std::cerr << line.dump() << '\n';
    return 1;
  }
  return 0;
}
