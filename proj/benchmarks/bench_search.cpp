#include <benchmark/benchmark.h>

#include <algorithm>
#include <vector>

#include "threadtrack/agent/search.hpp"
#include "threadtrack/experiment/experiment.hpp"
#include "threadtrack/qnet/drrn.hpp"

namespace tt = threadtrack;

namespace {

std::vector<double> random_q(std::uint64_t seed, int n) {
  tt::Rng rng(seed);
  std::vector<double> q(static_cast<std::size_t>(n));
  for (auto& x : q) x = tt::uniform_real(rng, -5.0, 5.0);
  return q;
}

void BM_TopMEnumerate(benchmark::State& state) {
  const auto q = random_q(1, 10);
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(tt::agent::top_m_actions(q, k, 10));
}
BENCHMARK(BM_TopMEnumerate)->DenseRange(1, 5);

void BM_TopMBestFirst(benchmark::State& state) {
  const auto q = random_q(1, 10);
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(tt::agent::top_m_best_first(q, k, 10));
}
BENCHMARK(BM_TopMBestFirst)->DenseRange(1, 5);

// Q2 over every K-subset of a 10-comment window, one call per subset versus
// the batched path that embeds each comment once.
struct Q2Fixture {
  std::shared_ptr<const tt::experiment::LoadedCorpus> corpus;
  tt::qnet::DrrnBiLstmParams params;
  tt::qnet::StateFeatures s;
  std::vector<double> h_s;
  std::vector<const tt::nn::SparseVector*> comments;

  Q2Fixture() {
    tt::experiment::RunConfig c;
    corpus = tt::experiment::resolve_corpus(c);
    tt::qnet::NetShape shape;
    shape.vocab = corpus->encoder->vocab.size();
    tt::Rng rng(3);
    params = tt::qnet::make_drrn_bilstm(shape, tt::knowledge::KnowledgeMode::kNone, rng);
    const auto& tree = *std::find_if(corpus->encoded.begin(), corpus->encoded.end(),
                                     [](const auto& t) { return t.bows.size() > 10; });
    s = tt::qnet::make_state_features(*corpus->encoder, tree.bows[0], 0, nullptr);
    h_s = tt::qnet::encode_state(params.state, s, nullptr, nullptr);
    for (std::size_t i = 1; i <= 10; ++i) comments.push_back(&tree.bows[i].counts());
  }
};

Q2Fixture& fixture() {
  static Q2Fixture f;
  return f;
}

void BM_Q2PerSubset(benchmark::State& state) {
  auto& f = fixture();
  const auto subsets = tt::agent::all_subsets(10, static_cast<int>(state.range(0)));
  std::vector<const tt::nn::SparseVector*> bows;
  for (auto _ : state) {
    for (const auto& a : subsets) {
      bows.clear();
      for (int i : a) bows.push_back(f.comments[static_cast<std::size_t>(i)]);
      benchmark::DoNotOptimize(tt::qnet::q2_bilstm(f.params, f.s, bows, nullptr));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(subsets.size()));
}
BENCHMARK(BM_Q2PerSubset)->DenseRange(2, 5)->Unit(benchmark::kMicrosecond);

void BM_Q2Batched(benchmark::State& state) {
  auto& f = fixture();
  const auto subsets = tt::agent::all_subsets(10, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(tt::qnet::q2_values(f.params, f.h_s, f.comments, subsets));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(subsets.size()));
}
BENCHMARK(BM_Q2Batched)->DenseRange(2, 5)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
