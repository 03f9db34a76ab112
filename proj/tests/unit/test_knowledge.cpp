#include <cmath>
#include <map>
#include <memory>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "threadtrack/error.hpp"
#include "threadtrack/knowledge/attention.hpp"
#include "threadtrack/knowledge/store.hpp"
#include "threadtrack/nn/grad_check.hpp"
#include "threadtrack/nn/init.hpp"

namespace threadtrack::knowledge {
namespace {

std::shared_ptr<text::TextEncoder> encoder_for(const std::vector<std::string>& docs) {
  return std::make_shared<text::TextEncoder>(text::TextEncoder::fit(docs));
}

KnowledgeRecord record(std::int64_t id, std::int64_t ts, std::string text, std::int64_t karma = 0) {
  KnowledgeRecord r;
  r.id = id;
  r.ts = ts;
  r.post_text = std::move(text);
  r.post_karma = karma;
  return r;
}

TEST(KnowledgeStore, IngestKeepsTopFiveComments) {
  KnowledgeStore store(encoder_for({"news alpha beta", "c0 c1 c2 c3 c4 c5"}));
  env::Comment post{1, std::nullopt, "news", 10, 100};
  std::vector<env::Comment> comments;
  for (int i = 0; i < 6; ++i) comments.push_back({10 + i, 1, "c" + std::to_string(i), i, 100 + i});
  const auto& doc = store.ingest(post, comments);
  EXPECT_EQ(doc.raw_popularity, 10 + 5 + 4 + 3 + 2 + 1);
  EXPECT_EQ(doc.text, "news c5 c4 c3 c2 c1");
  EXPECT_EQ(doc.bow.total(), 6u);
}

TEST(KnowledgeStore, FewCommentsAndTies) {
  KnowledgeStore store(encoder_for({"p a b"}));
  env::Comment post{1, std::nullopt, "p", 3, 0};
  std::vector<env::Comment> comments{{9, 1, "b", 2, 1}, {4, 1, "a", 2, 2}};
  const auto& doc = store.ingest(post, comments);
  EXPECT_EQ(doc.raw_popularity, 7);
  EXPECT_EQ(doc.text, "p a b");
}

TEST(KnowledgeStore, RejectsOutOfOrderIngest) {
  KnowledgeStore store(encoder_for({"x"}));
  store.ingest(record(1, 100, "x"));
  store.ingest(record(2, 100, "x"));
  EXPECT_THROW(store.ingest(record(3, 99, "x")), ConfigError);
  EXPECT_EQ(store.size(), 2u);
}

TEST(KnowledgeStore, WorldNewsFixture) {
  auto records = load_knowledge(testing::fixture("worldnews20.jsonl"));
  ASSERT_EQ(records.size(), 20u);
  const std::map<std::int64_t, std::int64_t> pop{
      {500, 580}, {501, 513}, {502, 528}, {503, 219}, {504, 174}, {505, 554}, {506, 238},
      {507, 175}, {508, 532}, {509, 407}, {510, 343}, {511, 11},  {512, 275}, {513, 23},
      {514, 136}, {515, 578}, {516, 193}, {517, 392}, {518, 354}, {519, 246}};
  const std::vector<std::size_t> comment_counts{4, 7, 8, 2, 7, 5, 3, 2, 4, 5,
                                                2, 0, 5, 0, 2, 7, 5, 5, 5, 4};
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(records[i].comments.size(), comment_counts[i]) << records[i].id;
    texts.push_back(records[i].post_text);
  }
  auto store = build_store(encoder_for(texts), records);
  ASSERT_EQ(store.size(), 20u);
  std::int64_t prev = -1;
  for (const auto& d : store.docs()) {
    EXPECT_EQ(d.raw_popularity, pop.at(d.id)) << d.id;
    EXPECT_GE(d.timestamp, prev);
    prev = d.timestamp;
  }
}

TEST(KnowledgeStore, JsonRoundTripAndErrors) {
  std::vector<KnowledgeRecord> recs{record(5, 10, "hello", 4)};
  recs[0].comments.push_back({"reply", 3});
  std::stringstream ss;
  write_knowledge(ss, recs);
  auto back = parse_knowledge(ss);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].post_karma, 4);
  EXPECT_EQ(back[0].comments[0].text, "reply");

  std::istringstream no_karma(R"({"id": 1, "ts": 0, "post_text": "x", "comments": []})");
  EXPECT_EQ(parse_knowledge(no_karma).at(0).post_karma, 0);
  std::istringstream bad("{\"id\": 1, \"ts\": 0, \"post_text\": \"x\", \"comments\": []}\n{nope\n");
  try {
    parse_knowledge(bad);
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(KnowledgeStore, VisibilityIsStrict) {
  auto store = build_store(encoder_for({"x"}), {record(1, 10, "x"), record(2, 20, "x"),
                                                record(3, 30, "x")});
  EXPECT_EQ(store.visible(10).size(), 0u);
  EXPECT_EQ(store.visible(11).size(), 1u);
  EXPECT_EQ(store.visible(30).size(), 2u);
  EXPECT_EQ(store.visible(31).size(), 3u);
}

TEST(Features, DayWeekAndPopularity) {
  KnowledgeDoc doc;
  doc.timestamp = 0;
  doc.raw_popularity = 50;
  auto f = features({}, doc, kDaySeconds, 100);
  EXPECT_EQ(f.day, 1.0);
  EXPECT_EQ(f.week, 1.0);
  EXPECT_EQ(f.semantic, 0.0);
  EXPECT_DOUBLE_EQ(f.popularity, 0.5);
  f = features({}, doc, kDaySeconds + 1, 100);
  EXPECT_EQ(f.day, 0.0);
  EXPECT_EQ(f.week, 1.0);
  f = features({}, doc, kWeekSeconds + 1, 100);
  EXPECT_EQ(f.week, 0.0);
  EXPECT_EQ(features({}, doc, 5, 0).popularity, 0.0);
}

TEST(Features, SemanticIsTfIdfCosine) {
  auto enc = encoder_for({"apple banana", "apple cherry", "durian"});
  KnowledgeStore store(enc);
  store.ingest(record(1, 0, "apple banana", 10));
  store.ingest(record(2, 1, "durian", 20));
  auto s = enc->tfidf(enc->bow("apple banana"));
  auto f = visible_features(store, s, 100);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_NEAR(f[0].semantic, 1.0, 1e-12);
  EXPECT_EQ(f[1].semantic, 0.0);
  EXPECT_DOUBLE_EQ(f[0].popularity, 0.5);
  EXPECT_DOUBLE_EQ(f[1].popularity, 1.0);
}

TEST(Attention, KnownSoftmax) {
  std::vector<RelevanceFeatures> f{{1, 0, 0, 0}, {0, 0, 0, 0}};
  std::vector<double> beta{std::log(2.0), 0, 0, 0};
  auto p = attention(f, beta);
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-12);
  std::vector<double> zero(4, 0.0);
  p = attention(f, zero);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_TRUE(attention({}, zero).empty());
  std::vector<double> bad(3, 0.0);
  EXPECT_THROW(attention(f, bad), DimensionError);
}

TEST(Attention, ShiftInvariantAndStableForLargeScores) {
  std::vector<RelevanceFeatures> f{{1, 1, 0.3, 0.2}, {0, 1, 0.9, 1.0}, {0, 0, 0.1, 0.5}};
  std::vector<double> beta{2, -1, 3, 0.5};
  auto p = attention(f, beta);
  std::vector<RelevanceFeatures> g = f;
  for (auto& x : g) x.week += 1.0;  // adds beta[1] to every score
  auto q = attention(g, beta);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  std::vector<double> huge{800, 0, 0, 0};
  auto r = attention(f, huge);
  EXPECT_NEAR(r[0], 1.0, 1e-12);
  EXPECT_TRUE(std::isfinite(r[1]));
}

TEST(Attention, WorldEmbeddingExample) {
  std::vector<double> p{0.5, 0.5};
  std::vector<RealVec> d{{3, 1}, {1, 1}};
  EXPECT_EQ(world_embedding(p, d, 2), (RealVec{2, 1}));
  EXPECT_EQ(world_embedding({}, {}, 3), (RealVec{0, 0, 0}));
}

TEST(Attention, BackwardMatchesFiniteDifferences) {
  Rng rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + trial % 4;
    AttentionCache c;
    for (std::size_t i = 0; i < n; ++i) {
      c.features.push_back({u(rng) > 0 ? 1.0 : 0.0, 1.0, std::abs(u(rng)), std::abs(u(rng))});
      c.doc_embeddings.push_back({u(rng), u(rng), u(rng)});
    }
    RealVec beta{u(rng), u(rng), u(rng), u(rng)};
    RealVec w{u(rng), u(rng), u(rng)};
    auto loss = [&](const RealVec& b, const std::vector<RealVec>& d) {
      return nn::dot(world_embedding(attention(c.features, b), d, 3), w);
    };
    c.p = attention(c.features, beta);
    auto g = attention_backward(c, w);
    const double h = 1e-6;
    for (int k = 0; k < 4; ++k) {
      RealVec up = beta, down = beta;
      up[k] += h;
      down[k] -= h;
      const double num = (loss(up, c.doc_embeddings) - loss(down, c.doc_embeddings)) / (2 * h);
      // The week flag is shared by every document, so its exact gradient is 0.
      EXPECT_NEAR(g.beta[k], num, 1e-6 * std::max(1.0, std::abs(num))) << k;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) {
        auto up = c.doc_embeddings, down = c.doc_embeddings;
        up[i][k] += h;
        down[i][k] -= h;
        const double num = (loss(beta, up) - loss(beta, down)) / (2 * h);
        EXPECT_LT(nn::relative_error(g.doc_embeddings[i][k], num), 1e-6);
      }
    }
  }
}

TEST(Attention, SingleDocumentHasNoBetaGradient) {
  AttentionCache c;
  c.features = {{1, 1, 0.5, 0.7}};
  c.p = {1.0};
  c.doc_embeddings = {{1.0, -2.0}};
  auto g = attention_backward(c, RealVec{0.3, 0.4});
  for (double b : g.beta) EXPECT_EQ(b, 0.0);
  EXPECT_EQ(g.doc_embeddings[0], (RealVec{0.3, 0.4}));
}

TEST(RuleRetrieval, EmptyAndSmallStores) {
  auto enc = encoder_for({"a b c"});
  KnowledgeStore empty(enc);
  std::vector<RealVec> none;
  for (auto rule : {RetrievalRule::kPastDay, RetrievalRule::kPastWeek,
                    RetrievalRule::kTop10Similar, RetrievalRule::kTop10Popular}) {
    EXPECT_EQ(rule_retrieval(empty, {}, 1000, rule, none, 2), (RealVec{0, 0}));
  }
  auto store = build_store(enc, {record(1, 0, "a", 1), record(2, 1, "b", 2), record(3, 2, "c", 3)});
  std::vector<RealVec> emb{{3, 0}, {0, 3}, {3, 3}};
  // Fewer than ten documents: every visible document, averaged.
  EXPECT_EQ(rule_retrieval(store, {}, 100, RetrievalRule::kTop10Popular, emb, 2), (RealVec{2, 2}));
  EXPECT_EQ(rule_retrieval(store, {}, 2, RetrievalRule::kTop10Similar, emb, 2),
            (RealVec{1.5, 1.5}));
}

TEST(RuleRetrieval, PastDayMatchesHandFilter) {
  auto enc = encoder_for({"x"});
  std::vector<KnowledgeRecord> recs;
  for (int i = 0; i < 8; ++i) recs.push_back(record(i, i * 20000, "x"));
  auto store = build_store(enc, recs);
  const std::int64_t t = 7 * 20000 + 1;  // all 8 visible
  std::vector<RealVec> emb;
  RealVec expect(1, 0.0);
  int count = 0;
  for (int i = 0; i < 8; ++i) {
    emb.push_back({static_cast<double>(i)});
    if (t - i * 20000 <= kDaySeconds) {
      expect[0] += i;
      ++count;
    }
  }
  expect[0] /= count;
  EXPECT_EQ(count, 5);
  EXPECT_NEAR(rule_retrieval(store, {}, t, RetrievalRule::kPastDay, emb, 1)[0], expect[0], 1e-12);
}

TEST(RuleSelection, TopTenPrefersNewerOnTies) {
  std::vector<RelevanceFeatures> f(12, RelevanceFeatures{0, 0, 0.5, 0.5});
  f[0].popularity = 1.0;
  auto chosen = rule_selection(f, RetrievalRule::kTop10Popular);
  std::vector<std::size_t> expect{0, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  EXPECT_EQ(chosen, expect);
}

TEST(KnowledgeMode, ParseRoundTrip) {
  for (auto m : {KnowledgeMode::kNone, KnowledgeMode::kAttention, KnowledgeMode::kPastDay,
                 KnowledgeMode::kPastWeek, KnowledgeMode::kTop10Similar,
                 KnowledgeMode::kTop10Popular}) {
    EXPECT_EQ(parse_knowledge_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_knowledge_mode("rule:whatever"), ConfigError);
  EXPECT_FALSE(rule_of(KnowledgeMode::kAttention).has_value());
}

class WorldTest : public ::testing::Test {
 protected:
  void SetUp() override {
    auto g = testing::small_generator(5);
    g.days = 10;  // day and week flags both vary over the store
    w_ = testing::make_world(g);
    params_.doc_net = nn::FeedForwardNet::mlp(w_->encoder->vocab.size(), 6, 2, 5);
    params_.beta.assign(4, 0.0);
    Rng rng(3);
    nn::init_uniform(params_, rng, 0.5);
    w_vec_ = {0.3, -0.7, 0.2, 0.9, -0.4};
  }

  double loss(const KnowledgeParams& p, KnowledgeMode mode, std::span<const RelevanceFeatures> f) {
    DocEmbeddingCache docs;
    return nn::dot(world_forward(p, mode, f, *w_->store, docs, nullptr), w_vec_);
  }

  std::unique_ptr<testing::World> w_;
  KnowledgeParams params_;
  RealVec w_vec_;
};

TEST_F(WorldTest, GradientsMatchFiniteDifferences) {
  const auto& tree = w_->encoded[0];
  const std::int64_t t = w_->store->docs().back().timestamp;
  auto s = w_->encoder->tfidf(tree.bows[0]);
  auto f = visible_features(*w_->store, s, t);
  ASSERT_GE(f.size(), 20u);
  for (auto mode : {KnowledgeMode::kAttention, KnowledgeMode::kPastDay,
                    KnowledgeMode::kTop10Popular}) {
    DocEmbeddingCache docs;
    WorldCache cache;
    world_forward(params_, mode, f, *w_->store, docs, &cache);
    KnowledgeParams grads = nn::zeros_like(params_);
    world_backward(params_, cache, w_vec_, grads, docs);
    EXPECT_TRUE(docs.has_pending());
    docs.flush(params_.doc_net, grads.doc_net);
    EXPECT_FALSE(docs.has_pending());
    auto report = nn::grad_check<KnowledgeParams>(
        [&](const KnowledgeParams& p) { return loss(p, mode, f); }, params_, grads);
    EXPECT_TRUE(report.passed(1e-4)) << to_string(mode) << " " << report.worst_slot << " "
                                     << report.max_rel_error;
    if (mode != KnowledgeMode::kAttention) {
      for (double b : grads.beta) EXPECT_EQ(b, 0.0);
    }
  }
}

TEST_F(WorldTest, NoVisibleDocumentsGivesZero) {
  DocEmbeddingCache docs;
  WorldCache cache;
  auto o = world_forward(params_, KnowledgeMode::kAttention, {}, *w_->store, docs, &cache);
  EXPECT_EQ(o, RealVec(5, 0.0));
  KnowledgeParams grads = nn::zeros_like(params_);
  world_backward(params_, cache, w_vec_, grads, docs);
  EXPECT_FALSE(docs.has_pending());
}

TEST_F(WorldTest, FutureDocumentsDoNotLeak) {
  // Perturbing documents at or after t must not change the world embedding.
  const std::int64_t t = w_->store->docs()[5].timestamp;
  std::vector<KnowledgeRecord> recs = generate_knowledge([] { auto g = testing::small_generator(5); g.days = 10; return g; }());
  std::vector<KnowledgeRecord> altered = recs;
  for (auto& r : altered) {
    if (r.ts >= t) {
      r.post_text = "completely different words here";
      r.post_karma += 1000;
    }
  }
  auto a = build_store(w_->encoder, recs);
  auto b = build_store(w_->encoder, altered);
  auto s = w_->encoder->tfidf(w_->encoded[1].bows[0]);
  for (auto mode : {KnowledgeMode::kAttention, KnowledgeMode::kPastWeek,
                    KnowledgeMode::kTop10Similar, KnowledgeMode::kTop10Popular}) {
    DocEmbeddingCache da, db;
    auto oa = world_forward(params_, mode, visible_features(a, s, t), a, da, nullptr);
    auto ob = world_forward(params_, mode, visible_features(b, s, t), b, db, nullptr);
    EXPECT_EQ(oa, ob) << to_string(mode);
  }
}

TEST_F(WorldTest, CacheRejectsParameterChangeWithPendingGradients) {
  auto f = visible_features(*w_->store, {}, w_->store->docs()[4].timestamp + 1);
  DocEmbeddingCache docs;
  WorldCache cache;
  world_forward(params_, KnowledgeMode::kAttention, f, *w_->store, docs, &cache);
  KnowledgeParams grads = nn::zeros_like(params_);
  world_backward(params_, cache, w_vec_, grads, docs);
  params_.touch();
  EXPECT_THROW(docs.prepare(params_.doc_net, *w_->store, f.size()), StaleCacheError);
}

}  // namespace
}  // namespace threadtrack::knowledge
