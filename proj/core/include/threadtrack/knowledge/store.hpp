#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "threadtrack/env/tree.hpp"
#include "threadtrack/text/encoder.hpp"

namespace threadtrack::knowledge {

inline constexpr std::size_t kTopComments = 5;

// One external post as read from the knowledge corpus:
//   {"id", "ts", "post_text", "post_karma"?, "comments": [{"text", "karma"}, ...]}
struct KnowledgeRecord {
  struct Reply {
    std::string text;
    std::int64_t karma = 0;
  };
  std::int64_t id = 0;
  std::int64_t ts = 0;
  std::string post_text;
  std::int64_t post_karma = 0;
  std::vector<Reply> comments;
};

std::vector<KnowledgeRecord> load_knowledge(const std::filesystem::path& path);
std::vector<KnowledgeRecord> parse_knowledge(std::istream& in);
void write_knowledge(std::ostream& out, std::span<const KnowledgeRecord> records);

struct KnowledgeDoc {
  std::int64_t id = 0;
  std::string text;  // post text followed by its top comments
  std::int64_t timestamp = 0;
  std::int64_t raw_popularity = 0;  // post karma + top comment karma
  text::BowVector bow;
  nn::SparseVector tfidf;
};

// Append-only, chronologically ordered document collection.
class KnowledgeStore {
 public:
  explicit KnowledgeStore(std::shared_ptr<const text::TextEncoder> encoder);

  // Builds a document from the post and its top-5 comments by karma (ties by
  // id). Throws ConfigError when the post predates the current tail.
  const KnowledgeDoc& ingest(const env::Comment& post, std::span<const env::Comment> comments);
  const KnowledgeDoc& ingest(const KnowledgeRecord& record);

  std::span<const KnowledgeDoc> docs() const { return docs_; }
  std::size_t size() const { return docs_.size(); }
  // Documents strictly older than t, in store order.
  std::span<const KnowledgeDoc> visible(std::int64_t t) const;
  const text::TextEncoder& encoder() const { return *encoder_; }

 private:
  std::shared_ptr<const text::TextEncoder> encoder_;
  std::vector<KnowledgeDoc> docs_;
};

// Records are sorted by (ts, id) before ingestion.
KnowledgeStore build_store(std::shared_ptr<const text::TextEncoder> encoder,
                           std::vector<KnowledgeRecord> records);

}  // namespace threadtrack::knowledge
