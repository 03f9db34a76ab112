#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "threadtrack/knowledge/attention.hpp"
#include "threadtrack/nn/bilstm.hpp"
#include "threadtrack/nn/layers.hpp"
#include "threadtrack/random.hpp"
#include "threadtrack/text/encoder.hpp"

namespace threadtrack::qnet {

using knowledge::KnowledgeMode;
using nn::RealVec;
using nn::SparseVector;

struct NetShape {
  std::size_t vocab = 0;
  std::size_t embed = 20;
  std::size_t hidden = 20;
  std::size_t hidden_layers = 2;
  std::size_t lstm_hidden = 20;

  friend bool operator==(const NetShape&, const NetShape&) = default;
};

// What a network sees of s_t: the post plus every tracked comment as one bag
// of words, the time the candidate window filled, and (with knowledge on) the
// relevance features of every document visible at that time.
struct StateFeatures {
  text::BowVector bow;
  SparseVector tfidf;
  std::int64_t t_now = 0;
  std::vector<knowledge::RelevanceFeatures> relevance;
};

// Builds state features; relevance is filled only when `store` is given.
StateFeatures make_state_features(const text::TextEncoder& encoder, text::BowVector bow,
                                  std::int64_t t_now, const knowledge::KnowledgeStore* store);

// Document store plus the doc-embedding cache of one parameter set.
struct KnowledgeRuntime {
  const knowledge::KnowledgeStore* store = nullptr;
  knowledge::DocEmbeddingCache docs;
};

// h_s = state_net(bow), optionally followed by projection([h_s || o]).
struct StateEncoder {
  KnowledgeMode mode = KnowledgeMode::kNone;
  nn::FeedForwardNet state_net;
  nn::DenseLayer projection;          // 2E -> E, identity; knowledge modes only
  knowledge::KnowledgeParams knowledge;  // knowledge modes only

  bool augmented() const { return mode != KnowledgeMode::kNone; }
  void collect_slots(std::vector<nn::ParamSlot>& out, const std::string& prefix);
  void touch();
};

struct StateCache {
  nn::FeedForwardNet::Cache net;
  bool augmented = false;
  knowledge::WorldCache world;
  nn::DenseLayer::Cache projection;
};

// World embedding o for a state (zero vector when nothing is visible).
RealVec world_of(const StateEncoder& enc, const StateFeatures& s, KnowledgeRuntime& rt,
                 knowledge::WorldCache* cache);

// h_s given an explicit world embedding; `world` must be present exactly when
// the encoder is augmented.
RealVec embed_state(const StateEncoder& enc, const SparseVector& bow, const RealVec* world,
                    StateCache* cache);

// Full pipeline: world_of followed by embed_state.
RealVec encode_state(const StateEncoder& enc, const StateFeatures& s, KnowledgeRuntime* rt,
                     StateCache* cache);

// Accumulates dL/dtheta of the encoder. Document gradients stay parked in
// rt.docs until flush_knowledge.
void backward_state(const StateEncoder& enc, const StateCache& cache, std::span<const double> d_hs,
                    StateEncoder& grads, KnowledgeRuntime* rt);
void flush_knowledge(const StateEncoder& enc, KnowledgeRuntime* rt, StateEncoder& grads);

// DRRN: Q0(s, c) = h_s . action_net(c). DRRN-Sum reuses it additively.
struct DrrnParams {
  StateEncoder state;
  nn::FeedForwardNet action_net;

  void collect_slots(std::vector<nn::ParamSlot>& out, const std::string& prefix);
  void touch();
  nn::CacheStamp stamp() const { return identity.stamp(); }
  nn::ParamIdentity identity;
};

// DRRN-BiLSTM: comment embeddings in timestamp order -> BiLSTM summary ->
// output layer -> dot product with h_s.
struct DrrnBiLstmParams {
  StateEncoder state;
  nn::FeedForwardNet comment_net;
  nn::BiLstm bilstm;
  nn::DenseLayer output;  // 2H -> E, identity

  void collect_slots(std::vector<nn::ParamSlot>& out, const std::string& prefix);
  void touch();
  nn::CacheStamp stamp() const { return identity.stamp(); }
  nn::ParamIdentity identity;
};

// Random U[-0.1, 0.1] initialization. The knowledge projection starts near
// [I || I], i.e. h_s begins as the sum of state and world embeddings.
DrrnParams make_drrn(const NetShape& shape, KnowledgeMode mode, Rng& rng);
DrrnBiLstmParams make_drrn_bilstm(const NetShape& shape, KnowledgeMode mode, Rng& rng);
NetShape shape_of(const DrrnParams& p);
NetShape shape_of(const DrrnBiLstmParams& p);

using ActionBows = std::span<const SparseVector* const>;

struct SumCache {
  nn::CacheStamp stamp;
  StateCache state;
  RealVec h_s;
  std::vector<nn::FeedForwardNet::Cache> actions;
  std::vector<RealVec> h_a;
};

// Sub-action values Q0(s, c_i) for a precomputed h_s.
std::vector<double> sub_action_values(const DrrnParams& p, std::span<const double> h_s,
                                      ActionBows comments);

double q0(const DrrnParams& p, const StateFeatures& s, const SparseVector& comment,
          KnowledgeRuntime* rt, SumCache* cache = nullptr);
// Sum of Q0 over the sub-actions (in the given order), h_s computed once.
double q1_sum(const DrrnParams& p, const StateFeatures& s, ActionBows comments,
              KnowledgeRuntime* rt, SumCache* cache = nullptr);
// Scalar-loss gradient for a q0 / q1_sum forward: grads += d_q * dQ/dtheta.
void backprop_q(const DrrnParams& p, const SumCache& cache, double d_q, DrrnParams& grads,
                KnowledgeRuntime* rt);

struct BiLstmCache {
  nn::CacheStamp stamp;
  StateCache state;
  RealVec h_s;
  std::vector<nn::FeedForwardNet::Cache> comments;
  std::vector<RealVec> embeddings;
  nn::BiLstm::Cache lstm;
  nn::DenseLayer::Cache output;
  RealVec h_a;
};

// Q2 action embedding for comments already in timestamp order.
RealVec action_embedding(const DrrnBiLstmParams& p, ActionBows comments, BiLstmCache* cache);
double q2_bilstm(const DrrnBiLstmParams& p, const StateFeatures& s, ActionBows comments,
                 KnowledgeRuntime* rt, BiLstmCache* cache = nullptr);
// Q2 of many actions sharing h_s. Actions hold positions in `comments`;
// each comment is embedded and projected into the BiLSTM once. Values equal
// q2_bilstm exactly.
std::vector<double> q2_values(const DrrnBiLstmParams& p, std::span<const double> h_s,
                              ActionBows comments, std::span<const std::vector<int>> actions);
void backprop_q(const DrrnBiLstmParams& p, const BiLstmCache& cache, double d_q,
                DrrnBiLstmParams& grads, KnowledgeRuntime* rt);

// Value copy of a trained DRRN for additive use as Q1.
DrrnParams transfer_q0_to_q1(const DrrnParams& q0_params);

// Starts Q2 from a trained Q0: the state encoder (knowledge side included)
// and the comment encoder are copied; BiLSTM and output layer keep their
// values. Throws DimensionError when shapes or knowledge modes differ.
void warm_start_from(DrrnBiLstmParams& q2, const DrrnParams& q0);

// Checkpoint plus "<path>.json" manifest naming architecture, knowledge mode
// and dimensions.
void save_model(const std::filesystem::path& path, const DrrnParams& p);
void save_model(const std::filesystem::path& path, const DrrnBiLstmParams& p);
DrrnParams load_drrn(const std::filesystem::path& path);
DrrnBiLstmParams load_drrn_bilstm(const std::filesystem::path& path);

}  // namespace threadtrack::qnet
