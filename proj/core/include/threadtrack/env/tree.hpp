#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace threadtrack::env {

struct Comment {
  std::int64_t id = 0;
  std::optional<std::int64_t> parent_id;  // absent for the post
  std::string text;
  std::int64_t karma = 0;
  std::int64_t timestamp = 0;  // seconds since epoch
};

// Immutable, validated discussion tree. Nodes are addressed by a dense index:
// 0 is the post, the rest follow (timestamp, id) order.
class DiscussionTree {
 public:
  // Validates and indexes `comments`. `lines` optionally maps each comment to
  // its source line for error reporting.
  static DiscussionTree build(std::vector<Comment> comments,
                              std::span<const std::size_t> lines = {});

  std::size_t size() const { return nodes_.size(); }
  std::size_t comment_count() const { return nodes_.size() - 1; }
  const Comment& node(int index) const { return nodes_[static_cast<std::size_t>(index)]; }
  const Comment& root() const { return nodes_.front(); }
  int parent(int index) const { return parent_[static_cast<std::size_t>(index)]; }
  std::span<const int> children(int index) const {
    return children_[static_cast<std::size_t>(index)];
  }
  std::optional<int> index_of(std::int64_t id) const;

  // True when `node` lies strictly below `ancestor`.
  bool is_descendant(int node, int ancestor) const {
    const auto n = static_cast<std::size_t>(node);
    const auto a = static_cast<std::size_t>(ancestor);
    return enter_[a] < enter_[n] && enter_[n] <= exit_[a];
  }
  std::vector<int> leaves() const;
  // Node indices on the path from the post down to `node`, inclusive.
  std::vector<int> path_to(int node) const;

 private:
  std::vector<Comment> nodes_;
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<int> enter_;
  std::vector<int> exit_;
  std::vector<std::pair<std::int64_t, int>> id_index_;  // sorted by id
};

// JSONL corpus: one comment per line,
//   {"id": int, "parent": int|null, "text": str, "karma": int, "ts": int}
// Trees are separated by blank lines and each block starts with its post.
// A directory path loads every *.jsonl file in name order, one tree per file.
std::vector<DiscussionTree> load_trees(const std::filesystem::path& path,
                                       std::size_t min_comments = 0);
std::vector<DiscussionTree> parse_trees(std::istream& in, std::size_t min_comments = 0);
void write_trees(std::ostream& out, std::span<const DiscussionTree> trees);

}  // namespace threadtrack::env
