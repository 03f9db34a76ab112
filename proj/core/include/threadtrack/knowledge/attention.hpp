#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "threadtrack/knowledge/store.hpp"
#include "threadtrack/nn/layers.hpp"

namespace threadtrack::knowledge {

using nn::RealVec;

inline constexpr std::int64_t kDaySeconds = 86400;
inline constexpr std::int64_t kWeekSeconds = 7 * kDaySeconds;
inline constexpr std::size_t kFeatureCount = 4;
inline constexpr std::size_t kRuleTopCount = 10;

// [past-day indicator, past-week indicator, tf-idf cosine, normalized popularity]
struct RelevanceFeatures {
  double day = 0.0;
  double week = 0.0;
  double semantic = 0.0;
  double popularity = 0.0;

  std::array<double, kFeatureCount> values() const { return {day, week, semantic, popularity}; }
  friend bool operator==(const RelevanceFeatures&, const RelevanceFeatures&) = default;
};

RelevanceFeatures features(const nn::SparseVector& state_tfidf, const KnowledgeDoc& doc,
                           std::int64_t t_now, std::int64_t max_visible_pop);

// Features of every document visible at t_now, in store order.
std::vector<RelevanceFeatures> visible_features(const KnowledgeStore& store,
                                                const nn::SparseVector& state_tfidf,
                                                std::int64_t t_now);

// Softmax over f_i . beta (max-shifted). Empty input gives an empty vector.
RealVec attention(std::span<const RelevanceFeatures> features, std::span<const double> beta);

// o = sum_i p_i d_i. With no documents the result is the zero vector of `dim`.
RealVec world_embedding(std::span<const double> p, std::span<const RealVec> doc_embeddings,
                        std::size_t dim);

struct AttentionCache {
  std::vector<RelevanceFeatures> features;
  RealVec p;
  std::vector<RealVec> doc_embeddings;
};

struct AttentionGrads {
  RealVec beta;                      // dL/dbeta
  std::vector<RealVec> doc_embeddings;  // dL/dd_i
};

// Gradients through o = sum_i softmax(F beta)_i d_i.
AttentionGrads attention_backward(const AttentionCache& cache, std::span<const double> d_o);

enum class RetrievalRule { kPastDay, kPastWeek, kTop10Similar, kTop10Popular };

// Indices (into the visible features) a rule selects, in store order.
std::vector<std::size_t> rule_selection(std::span<const RelevanceFeatures> features,
                                        RetrievalRule rule);

// Uniform average of the selected documents' embeddings; zero when nothing is
// selected. `doc_embeddings` covers at least the visible prefix of the store.
RealVec rule_retrieval(const KnowledgeStore& store, const nn::SparseVector& state_tfidf,
                       std::int64_t t_now, RetrievalRule rule,
                       std::span<const RealVec> doc_embeddings, std::size_t dim);

// How (and whether) a network augments its state with world knowledge.
enum class KnowledgeMode { kNone, kAttention, kPastDay, kPastWeek, kTop10Similar, kTop10Popular };

std::string to_string(KnowledgeMode mode);
KnowledgeMode parse_knowledge_mode(std::string_view text);
std::optional<RetrievalRule> rule_of(KnowledgeMode mode);

// Learnable knowledge-side parameters: the document encoder and beta.
struct KnowledgeParams {
  nn::FeedForwardNet doc_net;
  RealVec beta;

  void collect_slots(std::vector<nn::ParamSlot>& out, const std::string& prefix);
  void touch() {
    doc_net.touch();
    identity.bump();
  }
  nn::ParamIdentity identity;
};

// Document embeddings under one doc-net snapshot, computed lazily, plus the
// pending dL/d(embedding) accumulated by backward passes.
class DocEmbeddingCache {
 public:
  // Makes embeddings of docs [0, count) current for `doc_net`.
  void prepare(const nn::FeedForwardNet& doc_net, const KnowledgeStore& store, std::size_t count);
  std::span<const RealVec> embeddings(std::size_t count) const;
  void add_gradient(std::size_t doc, std::span<const double> d);
  // Backpropagates pending gradients into `grads` and clears them.
  void flush(const nn::FeedForwardNet& doc_net, nn::FeedForwardNet& grads);
  bool has_pending() const { return !touched_.empty(); }
  void invalidate();

 private:
  nn::CacheStamp stamp_;
  const KnowledgeStore* store_ = nullptr;
  std::vector<RealVec> embeddings_;
  std::vector<nn::FeedForwardNet::Cache> caches_;
  std::vector<bool> ready_;
  std::vector<RealVec> pending_;
  std::vector<std::size_t> touched_;
};

struct WorldCache {
  KnowledgeMode mode = KnowledgeMode::kNone;
  std::size_t visible = 0;
  std::vector<RelevanceFeatures> features;
  RealVec weights;  // attention probabilities or rule weights over visible docs
};

// World embedding for one state given its visible-document features.
RealVec world_forward(const KnowledgeParams& params, KnowledgeMode mode,
                      std::span<const RelevanceFeatures> features, const KnowledgeStore& store,
                      DocEmbeddingCache& docs, WorldCache* cache);

// dbeta goes into grads.beta; document gradients are parked in `docs` until
// DocEmbeddingCache::flush.
void world_backward(const KnowledgeParams& params, const WorldCache& cache,
                    std::span<const double> d_o, KnowledgeParams& grads,
                    DocEmbeddingCache& docs);

}  // namespace threadtrack::knowledge
