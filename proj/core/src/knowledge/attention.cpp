#include "threadtrack/knowledge/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "threadtrack/error.hpp"

namespace threadtrack::knowledge {

RelevanceFeatures features(const nn::SparseVector& state_tfidf, const KnowledgeDoc& doc,
                           std::int64_t t_now, std::int64_t max_visible_pop) {
  RelevanceFeatures f;
  const std::int64_t age = t_now - doc.timestamp;
  f.day = age <= kDaySeconds ? 1.0 : 0.0;
  f.week = age <= kWeekSeconds ? 1.0 : 0.0;
  f.semantic = text::cosine(state_tfidf, doc.tfidf);
  f.popularity = max_visible_pop > 0
                     ? std::clamp(static_cast<double>(doc.raw_popularity) /
                                      static_cast<double>(max_visible_pop),
                                  0.0, 1.0)
                     : 0.0;
  return f;
}

std::vector<RelevanceFeatures> visible_features(const KnowledgeStore& store,
                                                const nn::SparseVector& state_tfidf,
                                                std::int64_t t_now) {
  auto docs = store.visible(t_now);
  std::int64_t max_pop = 0;
  for (const auto& d : docs) max_pop = std::max(max_pop, d.raw_popularity);
  std::vector<RelevanceFeatures> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(features(state_tfidf, d, t_now, max_pop));
  return out;
}

RealVec attention(std::span<const RelevanceFeatures> feats, std::span<const double> beta) {
  if (beta.size() != kFeatureCount) throw DimensionError("attention: beta must have 4 entries");
  RealVec p(feats.size());
  if (feats.empty()) return p;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const auto v = feats[i].values();
    p[i] = v[0] * beta[0] + v[1] * beta[1] + v[2] * beta[2] + v[3] * beta[3];
  }
  const double mx = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (double& x : p) {
    x = std::exp(x - mx);
    z += x;
  }
  for (double& x : p) x /= z;
  return p;
}

RealVec world_embedding(std::span<const double> p, std::span<const RealVec> doc_embeddings,
                        std::size_t dim) {
  if (p.size() != doc_embeddings.size()) throw DimensionError("world embedding: weight/document count mismatch");
  RealVec o(dim, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (doc_embeddings[i].size() != dim) throw DimensionError("world embedding: document dimension mismatch");
    nn::axpy(p[i], doc_embeddings[i], o);
  }
  return o;
}

AttentionGrads attention_backward(const AttentionCache& cache, std::span<const double> d_o) {
  const std::size_t n = cache.p.size();
  AttentionGrads g;
  g.beta.assign(kFeatureCount, 0.0);
  g.doc_embeddings.resize(n);
  if (n == 0) return g;
  // dL/dp_i = d_o . d_i ; dL/ds_i = p_i (dL/dp_i - sum_j p_j dL/dp_j)
  RealVec dp(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dp[i] = nn::dot(d_o, cache.doc_embeddings[i]);
    mean += cache.p[i] * dp[i];
    g.doc_embeddings[i].assign(d_o.begin(), d_o.end());
    for (double& v : g.doc_embeddings[i]) v *= cache.p[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double ds = cache.p[i] * (dp[i] - mean);
    const auto f = cache.features[i].values();
    for (std::size_t k = 0; k < kFeatureCount; ++k) g.beta[k] += ds * f[k];
  }
  return g;
}

std::vector<std::size_t> rule_selection(std::span<const RelevanceFeatures> feats,
                                        RetrievalRule rule) {
  std::vector<std::size_t> out;
  switch (rule) {
    case RetrievalRule::kPastDay:
    case RetrievalRule::kPastWeek:
      for (std::size_t i = 0; i < feats.size(); ++i) {
        const double flag = rule == RetrievalRule::kPastDay ? feats[i].day : feats[i].week;
        if (flag > 0.0) out.push_back(i);
      }
      return out;
    case RetrievalRule::kTop10Similar:
    case RetrievalRule::kTop10Popular: {
      std::vector<std::size_t> order(feats.size());
      std::iota(order.begin(), order.end(), 0);
      auto key = [&](std::size_t i) {
        return rule == RetrievalRule::kTop10Similar ? feats[i].semantic : feats[i].popularity;
      };
      // Newer documents win ties.
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (key(a) != key(b)) return key(a) > key(b);
        return a > b;
      });
      if (order.size() > kRuleTopCount) order.resize(kRuleTopCount);
      std::sort(order.begin(), order.end());
      return order;
    }
  }
  return out;
}

RealVec rule_retrieval(const KnowledgeStore& store, const nn::SparseVector& state_tfidf,
                       std::int64_t t_now, RetrievalRule rule,
                       std::span<const RealVec> doc_embeddings, std::size_t dim) {
  const auto feats = visible_features(store, state_tfidf, t_now);
  if (doc_embeddings.size() < feats.size()) throw DimensionError("rule retrieval: missing document embeddings");
  const auto chosen = rule_selection(feats, rule);
  RealVec o(dim, 0.0);
  if (chosen.empty()) return o;
  const double w = 1.0 / static_cast<double>(chosen.size());
  for (auto i : chosen) {
    if (doc_embeddings[i].size() != dim) throw DimensionError("rule retrieval: document dimension mismatch");
    nn::axpy(w, doc_embeddings[i], o);
  }
  return o;
}

std::string to_string(KnowledgeMode mode) {
  switch (mode) {
    case KnowledgeMode::kNone: return "none";
    case KnowledgeMode::kAttention: return "attention";
    case KnowledgeMode::kPastDay: return "rule:past_day";
    case KnowledgeMode::kPastWeek: return "rule:past_week";
    case KnowledgeMode::kTop10Similar: return "rule:top10_similar";
    case KnowledgeMode::kTop10Popular: return "rule:top10_popular";
  }
  return "none";
}

KnowledgeMode parse_knowledge_mode(std::string_view text) {
  for (auto m : {KnowledgeMode::kNone, KnowledgeMode::kAttention, KnowledgeMode::kPastDay,
                 KnowledgeMode::kPastWeek, KnowledgeMode::kTop10Similar,
                 KnowledgeMode::kTop10Popular}) {
    if (to_string(m) == text) return m;
  }
  throw ConfigError("unknown knowledge mode '" + std::string(text) + "'");
}

std::optional<RetrievalRule> rule_of(KnowledgeMode mode) {
  switch (mode) {
    case KnowledgeMode::kPastDay: return RetrievalRule::kPastDay;
    case KnowledgeMode::kPastWeek: return RetrievalRule::kPastWeek;
    case KnowledgeMode::kTop10Similar: return RetrievalRule::kTop10Similar;
    case KnowledgeMode::kTop10Popular: return RetrievalRule::kTop10Popular;
    default: return std::nullopt;
  }
}

void KnowledgeParams::collect_slots(std::vector<nn::ParamSlot>& out, const std::string& prefix) {
  doc_net.collect_slots(out, prefix + "doc_net.");
  out.push_back({prefix + "beta", {beta.size()}, beta});
}

void DocEmbeddingCache::prepare(const nn::FeedForwardNet& doc_net, const KnowledgeStore& store,
                                std::size_t count) {
  if (count > store.size()) throw DimensionError("doc cache: more documents requested than stored");
  if (store_ != &store || stamp_ != doc_net.stamp()) {
    if (!touched_.empty()) throw StaleCacheError("doc cache: parameters changed with gradients pending");
    store_ = &store;
    stamp_ = doc_net.stamp();
    embeddings_.assign(store.size(), {});
    caches_.assign(store.size(), {});
    ready_.assign(store.size(), false);
    pending_.assign(store.size(), {});
  }
  if (embeddings_.size() < store.size()) {
    embeddings_.resize(store.size());
    caches_.resize(store.size());
    ready_.resize(store.size(), false);
    pending_.resize(store.size());
  }
  const auto docs = store.docs();
  for (std::size_t i = 0; i < count; ++i) {
    if (ready_[i]) continue;
    embeddings_[i] = doc_net.forward(docs[i].bow.counts(), &caches_[i]);
    ready_[i] = true;
  }
}

std::span<const RealVec> DocEmbeddingCache::embeddings(std::size_t count) const {
  for (std::size_t i = 0; i < count; ++i) {
    if (i >= ready_.size() || !ready_[i]) throw StaleCacheError("doc cache: embedding not prepared");
  }
  return {embeddings_.data(), count};
}

void DocEmbeddingCache::add_gradient(std::size_t doc, std::span<const double> d) {
  if (doc >= ready_.size() || !ready_[doc]) throw StaleCacheError("doc cache: gradient for unprepared document");
  auto& p = pending_[doc];
  if (p.empty()) {
    p.assign(d.begin(), d.end());
    touched_.push_back(doc);
  } else {
    nn::axpy(1.0, d, p);
  }
}

void DocEmbeddingCache::flush(const nn::FeedForwardNet& doc_net, nn::FeedForwardNet& grads) {
  std::sort(touched_.begin(), touched_.end());
  for (auto i : touched_) {
    doc_net.backward(caches_[i], pending_[i], grads, /*want_input_grad=*/false);
    pending_[i].clear();
  }
  touched_.clear();
}

void DocEmbeddingCache::invalidate() {
  store_ = nullptr;
  stamp_ = {};
  embeddings_.clear();
  caches_.clear();
  ready_.clear();
  pending_.clear();
  touched_.clear();
}

RealVec world_forward(const KnowledgeParams& params, KnowledgeMode mode,
                      std::span<const RelevanceFeatures> feats, const KnowledgeStore& store,
                      DocEmbeddingCache& docs, WorldCache* cache) {
  const std::size_t dim = params.doc_net.out_dim();
  const std::size_t n = feats.size();
  RealVec weights;
  if (mode == KnowledgeMode::kAttention) {
    weights = attention(feats, params.beta);
  } else if (auto rule = rule_of(mode)) {
    weights.assign(n, 0.0);
    const auto chosen = rule_selection(feats, *rule);
    for (auto i : chosen) weights[i] = 1.0 / static_cast<double>(chosen.size());
  } else {
    throw ConfigError("world embedding requested without a knowledge mode");
  }
  docs.prepare(params.doc_net, store, n);
  RealVec o = world_embedding(weights, docs.embeddings(n), dim);
  if (cache) {
    cache->mode = mode;
    cache->visible = n;
    cache->features.assign(feats.begin(), feats.end());
    cache->weights = std::move(weights);
  }
  return o;
}

void world_backward(const KnowledgeParams& params, const WorldCache& cache,
                    std::span<const double> d_o, KnowledgeParams& grads, DocEmbeddingCache& docs) {
  if (d_o.size() != params.doc_net.out_dim()) throw DimensionError("world backward: gradient dimension mismatch");
  const std::size_t n = cache.visible;
  if (n == 0) return;
  const auto embeddings = docs.embeddings(n);
  if (cache.mode == KnowledgeMode::kAttention) {
    AttentionCache ac{cache.features, cache.weights, {embeddings.begin(), embeddings.end()}};
    AttentionGrads g = attention_backward(ac, d_o);
    nn::axpy(1.0, g.beta, grads.beta);
    for (std::size_t i = 0; i < n; ++i) docs.add_gradient(i, g.doc_embeddings[i]);
    return;
  }
  RealVec d(d_o.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (cache.weights[i] == 0.0) continue;
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = cache.weights[i] * d_o[k];
    docs.add_gradient(i, d);
  }
}

}  // namespace threadtrack::knowledge
