#include "threadtrack/qnet/drrn.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "threadtrack/error.hpp"
#include "threadtrack/nn/checkpoint.hpp"
#include "threadtrack/nn/init.hpp"

namespace threadtrack::qnet {
namespace {

using nlohmann::json;

void require_runtime(const StateEncoder& enc, const KnowledgeRuntime* rt) {
  if (enc.augmented() && (rt == nullptr || rt->store == nullptr)) {
    throw ConfigError("knowledge-augmented network evaluated without a document store");
  }
}

StateEncoder make_encoder(const NetShape& shape, KnowledgeMode mode) {
  StateEncoder enc;
  enc.mode = mode;
  enc.state_net = nn::FeedForwardNet::mlp(shape.vocab, shape.hidden, shape.hidden_layers, shape.embed);
  if (enc.augmented()) {
    enc.projection = nn::DenseLayer(2 * shape.embed, shape.embed, nn::Activation::kIdentity);
    enc.knowledge.doc_net =
        nn::FeedForwardNet::mlp(shape.vocab, shape.hidden, shape.hidden_layers, shape.embed);
    enc.knowledge.beta.assign(knowledge::kFeatureCount, 0.0);
  }
  return enc;
}

// [I || I] plus the random init: h_s starts as state + world embedding.
void bias_projection_to_sum(StateEncoder& enc) {
  if (!enc.augmented()) return;
  auto& w = enc.projection.weights;
  for (std::size_t i = 0; i < w.rows(); ++i) {
    w(i, i) += 1.0;
    w(i, w.rows() + i) += 1.0;
  }
  enc.touch();
}

json manifest(const std::string& arch, KnowledgeMode mode, const NetShape& s) {
  return {{"architecture", arch},
          {"knowledge_mode", knowledge::to_string(mode)},
          {"vocab", s.vocab},
          {"embed", s.embed},
          {"hidden", s.hidden},
          {"hidden_layers", s.hidden_layers},
          {"lstm_hidden", s.lstm_hidden}};
}

std::filesystem::path manifest_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

void write_manifest(const std::filesystem::path& path, const json& j) {
  std::ofstream out(manifest_path(path));
  if (!out) throw Error("cannot write " + manifest_path(path).string());
  out << j.dump(2) << '\n';
}

std::pair<KnowledgeMode, NetShape> read_manifest(const std::filesystem::path& path,
                                                 const std::string& arch) {
  std::ifstream in(manifest_path(path));
  if (!in) throw LoadError("cannot open model manifest " + manifest_path(path).string());
  try {
    json j = json::parse(in);
    if (j.at("architecture").get<std::string>() != arch) {
      throw LoadError("model manifest: expected architecture " + arch + ", found " +
                      j.at("architecture").get<std::string>());
    }
    NetShape s;
    s.vocab = j.at("vocab").get<std::size_t>();
    s.embed = j.at("embed").get<std::size_t>();
    s.hidden = j.at("hidden").get<std::size_t>();
    s.hidden_layers = j.at("hidden_layers").get<std::size_t>();
    s.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
    return {knowledge::parse_knowledge_mode(j.at("knowledge_mode").get<std::string>()), s};
  } catch (const json::exception& e) {
    throw LoadError(std::string("model manifest: ") + e.what());
  }
}

}  // namespace

StateFeatures make_state_features(const text::TextEncoder& encoder, text::BowVector bow,
                                  std::int64_t t_now, const knowledge::KnowledgeStore* store) {
  StateFeatures s;
  s.tfidf = encoder.tfidf(bow);
  s.bow = std::move(bow);
  s.t_now = t_now;
  if (store) s.relevance = knowledge::visible_features(*store, s.tfidf, t_now);
  return s;
}

void StateEncoder::collect_slots(std::vector<nn::ParamSlot>& out, const std::string& prefix) {
  state_net.collect_slots(out, prefix + "state_net.");
  if (augmented()) {
    projection.collect_slots(out, prefix + "projection.");
    knowledge.collect_slots(out, prefix + "knowledge.");
  }
}

void StateEncoder::touch() {
  state_net.touch();
  projection.touch();
  knowledge.touch();
}

RealVec world_of(const StateEncoder& enc, const StateFeatures& s, KnowledgeRuntime& rt,
                 knowledge::WorldCache* cache) {
  require_runtime(enc, &rt);
  return knowledge::world_forward(enc.knowledge, enc.mode, s.relevance, *rt.store, rt.docs, cache);
}

RealVec embed_state(const StateEncoder& enc, const SparseVector& bow, const RealVec* world,
                    StateCache* cache) {
  if (enc.augmented() != (world != nullptr)) {
    throw DimensionError(enc.augmented() ? "embed_state: world embedding required"
                                         : "embed_state: world embedding given to a plain encoder");
  }
  RealVec h = enc.state_net.forward(bow, cache ? &cache->net : nullptr);
  if (cache) cache->augmented = enc.augmented();
  if (!world) return h;
  if (world->size() != h.size()) throw DimensionError("embed_state: world embedding dimension mismatch");
  h.insert(h.end(), world->begin(), world->end());
  return enc.projection.forward(h, cache ? &cache->projection : nullptr);
}

RealVec encode_state(const StateEncoder& enc, const StateFeatures& s, KnowledgeRuntime* rt,
                     StateCache* cache) {
  if (!enc.augmented()) return embed_state(enc, s.bow.counts(), nullptr, cache);
  require_runtime(enc, rt);
  RealVec o = world_of(enc, s, *rt, cache ? &cache->world : nullptr);
  return embed_state(enc, s.bow.counts(), &o, cache);
}

void backward_state(const StateEncoder& enc, const StateCache& cache, std::span<const double> d_hs,
                    StateEncoder& grads, KnowledgeRuntime* rt) {
  if (!cache.augmented) {
    enc.state_net.backward(cache.net, d_hs, grads.state_net, false);
    return;
  }
  require_runtime(enc, rt);
  RealVec d_cat = enc.projection.backward(cache.projection, d_hs, grads.projection);
  const std::size_t e = enc.state_net.out_dim();
  std::span<const double> d_cat_view(d_cat);
  enc.state_net.backward(cache.net, d_cat_view.first(e), grads.state_net, false);
  knowledge::world_backward(enc.knowledge, cache.world, d_cat_view.subspan(e), grads.knowledge,
                            rt->docs);
}

void flush_knowledge(const StateEncoder& enc, KnowledgeRuntime* rt, StateEncoder& grads) {
  if (!enc.augmented() || rt == nullptr) return;
  rt->docs.flush(enc.knowledge.doc_net, grads.knowledge.doc_net);
}

void DrrnParams::collect_slots(std::vector<nn::ParamSlot>& out, const std::string& prefix) {
  state.collect_slots(out, prefix + "state.");
  action_net.collect_slots(out, prefix + "action_net.");
}

void DrrnParams::touch() {
  state.touch();
  action_net.touch();
  identity.bump();
}

void DrrnBiLstmParams::collect_slots(std::vector<nn::ParamSlot>& out, const std::string& prefix) {
  state.collect_slots(out, prefix + "state.");
  comment_net.collect_slots(out, prefix + "comment_net.");
  bilstm.collect_slots(out, prefix + "bilstm.");
  output.collect_slots(out, prefix + "output.");
}

void DrrnBiLstmParams::touch() {
  state.touch();
  comment_net.touch();
  bilstm.touch();
  output.touch();
  identity.bump();
}

DrrnParams make_drrn(const NetShape& shape, KnowledgeMode mode, Rng& rng) {
  if (shape.vocab == 0 || shape.embed == 0 || shape.hidden == 0) {
    throw ConfigError("network shape: vocab, embed and hidden must be positive");
  }
  DrrnParams p;
  p.state = make_encoder(shape, mode);
  p.action_net = nn::FeedForwardNet::mlp(shape.vocab, shape.hidden, shape.hidden_layers, shape.embed);
  nn::init_uniform(p, rng);
  bias_projection_to_sum(p.state);
  p.touch();
  return p;
}

DrrnBiLstmParams make_drrn_bilstm(const NetShape& shape, KnowledgeMode mode, Rng& rng) {
  if (shape.vocab == 0 || shape.embed == 0 || shape.hidden == 0 || shape.lstm_hidden == 0) {
    throw ConfigError("network shape: all dimensions must be positive");
  }
  DrrnBiLstmParams p;
  p.state = make_encoder(shape, mode);
  p.comment_net = nn::FeedForwardNet::mlp(shape.vocab, shape.hidden, shape.hidden_layers, shape.embed);
  p.bilstm = nn::BiLstm(shape.embed, shape.lstm_hidden);
  p.output = nn::DenseLayer(2 * shape.lstm_hidden, shape.embed, nn::Activation::kIdentity);
  nn::init_uniform(p, rng);
  bias_projection_to_sum(p.state);
  p.touch();
  return p;
}

NetShape shape_of(const DrrnParams& p) {
  const auto& net = p.state.state_net;
  return {net.in_dim(), net.out_dim(), net.layers().front().out_dim(), net.depth() - 1, NetShape{}.lstm_hidden};
}

NetShape shape_of(const DrrnBiLstmParams& p) {
  const auto& net = p.state.state_net;
  return {net.in_dim(), net.out_dim(), net.layers().front().out_dim(), net.depth() - 1,
          p.bilstm.hidden_dim()};
}

std::vector<double> sub_action_values(const DrrnParams& p, std::span<const double> h_s,
                                      ActionBows comments) {
  std::vector<double> q;
  q.reserve(comments.size());
  for (const auto* c : comments) q.push_back(nn::dot(h_s, p.action_net.forward(*c)));
  return q;
}

double q0(const DrrnParams& p, const StateFeatures& s, const SparseVector& comment,
          KnowledgeRuntime* rt, SumCache* cache) {
  const SparseVector* one[] = {&comment};
  return q1_sum(p, s, one, rt, cache);
}

double q1_sum(const DrrnParams& p, const StateFeatures& s, ActionBows comments,
              KnowledgeRuntime* rt, SumCache* cache) {
  if (comments.empty()) throw DimensionError("q1_sum: empty action");
  RealVec h_s = encode_state(p.state, s, rt, cache ? &cache->state : nullptr);
  if (cache) {
    cache->stamp = p.stamp();
    cache->actions.assign(comments.size(), {});
    cache->h_a.assign(comments.size(), {});
  }
  double q = 0.0;
  for (std::size_t i = 0; i < comments.size(); ++i) {
    RealVec h_a = p.action_net.forward(*comments[i], cache ? &cache->actions[i] : nullptr);
    const double v = nn::dot(h_s, h_a);
    q = i == 0 ? v : q + v;
    if (cache) cache->h_a[i] = std::move(h_a);
  }
  if (cache) cache->h_s = std::move(h_s);
  return q;
}

void backprop_q(const DrrnParams& p, const SumCache& cache, double d_q, DrrnParams& grads,
                KnowledgeRuntime* rt) {
  nn::check_stamp(cache.stamp, p.stamp(), "backprop_q");
  RealVec d_hs(cache.h_s.size(), 0.0);
  RealVec d_ha(cache.h_s.size());
  for (std::size_t i = 0; i < cache.h_a.size(); ++i) {
    nn::axpy(d_q, cache.h_a[i], d_hs);
    for (std::size_t k = 0; k < d_ha.size(); ++k) d_ha[k] = d_q * cache.h_s[k];
    p.action_net.backward(cache.actions[i], d_ha, grads.action_net, false);
  }
  backward_state(p.state, cache.state, d_hs, grads.state, rt);
}

RealVec action_embedding(const DrrnBiLstmParams& p, ActionBows comments, BiLstmCache* cache) {
  if (comments.empty()) throw DimensionError("q2: empty action");
  std::vector<RealVec> emb(comments.size());
  if (cache) cache->comments.assign(comments.size(), {});
  for (std::size_t i = 0; i < comments.size(); ++i) {
    emb[i] = p.comment_net.forward(*comments[i], cache ? &cache->comments[i] : nullptr);
  }
  RealVec summary = p.bilstm.forward(emb, cache ? &cache->lstm : nullptr);
  RealVec h_a = p.output.forward(summary, cache ? &cache->output : nullptr);
  if (cache) {
    cache->embeddings = std::move(emb);
    cache->h_a = h_a;
  }
  return h_a;
}

double q2_bilstm(const DrrnBiLstmParams& p, const StateFeatures& s, ActionBows comments,
                 KnowledgeRuntime* rt, BiLstmCache* cache) {
  if (comments.empty()) throw DimensionError("q2: empty action");
  RealVec h_s = encode_state(p.state, s, rt, cache ? &cache->state : nullptr);
  RealVec h_a = action_embedding(p, comments, cache);
  const double q = nn::dot(h_s, h_a);
  if (cache) {
    cache->stamp = p.stamp();
    cache->h_s = std::move(h_s);
  }
  return q;
}

std::vector<double> q2_values(const DrrnBiLstmParams& p, std::span<const double> h_s,
                              ActionBows comments, std::span<const std::vector<int>> actions) {
  std::vector<nn::BiLstm::Projection> proj;
  proj.reserve(comments.size());
  for (const auto* bow : comments) proj.push_back(p.bilstm.project(p.comment_net.forward(*bow)));
  std::vector<double> out;
  out.reserve(actions.size());
  std::vector<const nn::BiLstm::Projection*> seq;
  for (const auto& a : actions) {
    if (a.empty()) throw DimensionError("q2: empty action");
    seq.clear();
    for (int i : a) seq.push_back(&proj.at(static_cast<std::size_t>(i)));
    const RealVec h_a = p.output.forward(p.bilstm.forward_projected(seq));
    out.push_back(nn::dot(h_s, h_a));
  }
  return out;
}

void backprop_q(const DrrnBiLstmParams& p, const BiLstmCache& cache, double d_q,
                DrrnBiLstmParams& grads, KnowledgeRuntime* rt) {
  nn::check_stamp(cache.stamp, p.stamp(), "backprop_q");
  RealVec d_hs(cache.h_a.size());
  RealVec d_ha(cache.h_s.size());
  for (std::size_t k = 0; k < d_hs.size(); ++k) {
    d_hs[k] = d_q * cache.h_a[k];
    d_ha[k] = d_q * cache.h_s[k];
  }
  RealVec d_summary = p.output.backward(cache.output, d_ha, grads.output);
  auto d_emb = p.bilstm.backward(cache.lstm, d_summary, grads.bilstm);
  for (std::size_t i = 0; i < d_emb.size(); ++i) {
    p.comment_net.backward(cache.comments[i], d_emb[i], grads.comment_net, false);
  }
  backward_state(p.state, cache.state, d_hs, grads.state, rt);
}

DrrnParams transfer_q0_to_q1(const DrrnParams& q0_params) {
  DrrnParams q1 = q0_params;
  q1.touch();
  return q1;
}

void warm_start_from(DrrnBiLstmParams& q2, const DrrnParams& q0) {
  if (q2.state.mode != q0.state.mode) throw DimensionError("warm start: knowledge modes differ");
  const auto a = shape_of(q2);
  const auto b = shape_of(q0);
  if (a.vocab != b.vocab || a.embed != b.embed || a.hidden != b.hidden ||
      a.hidden_layers != b.hidden_layers) {
    throw DimensionError("warm start: network shapes differ");
  }
  q2.state = q0.state;
  q2.comment_net = q0.action_net;
  q2.touch();
}

void save_model(const std::filesystem::path& path, const DrrnParams& p) {
  nn::save_params(path, p);
  write_manifest(path, manifest("drrn", p.state.mode, shape_of(p)));
}

void save_model(const std::filesystem::path& path, const DrrnBiLstmParams& p) {
  nn::save_params(path, p);
  write_manifest(path, manifest("drrn_bilstm", p.state.mode, shape_of(p)));
}

DrrnParams load_drrn(const std::filesystem::path& path) {
  auto [mode, shape] = read_manifest(path, "drrn");
  Rng rng(0);
  DrrnParams p = make_drrn(shape, mode, rng);
  nn::load_params(path, p);
  return p;
}

DrrnBiLstmParams load_drrn_bilstm(const std::filesystem::path& path) {
  auto [mode, shape] = read_manifest(path, "drrn_bilstm");
  Rng rng(0);
  DrrnBiLstmParams p = make_drrn_bilstm(shape, mode, rng);
  nn::load_params(path, p);
  return p;
}

}  // namespace threadtrack::qnet
