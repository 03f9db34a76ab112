#include "threadtrack/knowledge/store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "threadtrack/error.hpp"

namespace threadtrack::knowledge {

using nlohmann::json;

std::vector<KnowledgeRecord> parse_knowledge(std::istream& in) {
  std::vector<KnowledgeRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      KnowledgeRecord r;
      r.id = j.at("id").get<std::int64_t>();
      r.ts = j.at("ts").get<std::int64_t>();
      r.post_text = j.at("post_text").get<std::string>();
      r.post_karma = j.value("post_karma", std::int64_t{0});
      for (const auto& c : j.at("comments")) {
        r.comments.push_back({c.at("text").get<std::string>(), c.at("karma").get<std::int64_t>()});
      }
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw LoadError(std::string("bad knowledge record: ") + e.what(), line_no);
    }
  }
  return out;
}

std::vector<KnowledgeRecord> load_knowledge(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open knowledge corpus " + path.string());
  try {
    return parse_knowledge(in);
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

void write_knowledge(std::ostream& out, std::span<const KnowledgeRecord> records) {
  for (const auto& r : records) {
    json j;
    j["id"] = r.id;
    j["ts"] = r.ts;
    j["post_text"] = r.post_text;
    j["post_karma"] = r.post_karma;
    json comments = json::array();
    for (const auto& c : r.comments) comments.push_back({{"text", c.text}, {"karma", c.karma}});
    j["comments"] = std::move(comments);
    out << j.dump() << '\n';
  }
}

KnowledgeStore::KnowledgeStore(std::shared_ptr<const text::TextEncoder> encoder)
    : encoder_(std::move(encoder)) {
  if (!encoder_) throw ConfigError("knowledge store needs a text encoder");
}

const KnowledgeDoc& KnowledgeStore::ingest(const env::Comment& post,
                                           std::span<const env::Comment> comments) {
  if (!docs_.empty() && post.timestamp < docs_.back().timestamp) {
    throw ConfigError("knowledge store: document " + std::to_string(post.id) +
                      " is older than the store tail");
  }
  std::vector<const env::Comment*> ranked;
  ranked.reserve(comments.size());
  for (const auto& c : comments) ranked.push_back(&c);
  std::sort(ranked.begin(), ranked.end(), [](const env::Comment* a, const env::Comment* b) {
    if (a->karma != b->karma) return a->karma > b->karma;
    return a->id < b->id;
  });
  if (ranked.size() > kTopComments) ranked.resize(kTopComments);

  KnowledgeDoc doc;
  doc.id = post.id;
  doc.timestamp = post.timestamp;
  doc.text = post.text;
  doc.raw_popularity = post.karma;
  for (const auto* c : ranked) {
    doc.text += ' ';
    doc.text += c->text;
    doc.raw_popularity += c->karma;
  }
  doc.bow = encoder_->bow(doc.text);
  doc.tfidf = encoder_->tfidf(doc.bow);
  docs_.push_back(std::move(doc));
  return docs_.back();
}

const KnowledgeDoc& KnowledgeStore::ingest(const KnowledgeRecord& record) {
  env::Comment post{record.id, std::nullopt, record.post_text, record.post_karma, record.ts};
  std::vector<env::Comment> replies;
  replies.reserve(record.comments.size());
  for (std::size_t i = 0; i < record.comments.size(); ++i) {
    replies.push_back({static_cast<std::int64_t>(i), record.id, record.comments[i].text,
                       record.comments[i].karma, record.ts});
  }
  return ingest(post, replies);
}

std::span<const KnowledgeDoc> KnowledgeStore::visible(std::int64_t t) const {
  auto it = std::partition_point(docs_.begin(), docs_.end(),
                                 [t](const KnowledgeDoc& d) { return d.timestamp < t; });
  return {docs_.data(), static_cast<std::size_t>(it - docs_.begin())};
}

KnowledgeStore build_store(std::shared_ptr<const text::TextEncoder> encoder,
                           std::vector<KnowledgeRecord> records) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return a.ts != b.ts ? a.ts < b.ts : a.id < b.id;
  });
  KnowledgeStore store(std::move(encoder));
  for (const auto& r : records) store.ingest(r);
  return store;
}

}  // namespace threadtrack::knowledge
