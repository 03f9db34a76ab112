#include "threadtrack/env/tree.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "threadtrack/error.hpp"

namespace threadtrack::env {
namespace {

using nlohmann::json;

std::size_t line_of(std::span<const std::size_t> lines, std::size_t i) {
  return i < lines.size() ? lines[i] : 0;
}

}  // namespace

DiscussionTree DiscussionTree::build(std::vector<Comment> comments,
                                     std::span<const std::size_t> lines) {
  if (comments.empty()) throw LoadError("tree: no comments");

  std::map<std::int64_t, std::size_t> by_id;
  std::optional<std::size_t> root;
  for (std::size_t i = 0; i < comments.size(); ++i) {
    const Comment& c = comments[i];
    if (!by_id.emplace(c.id, i).second) {
      throw LoadError("tree: duplicate comment id " + std::to_string(c.id), line_of(lines, i));
    }
    if (!c.parent_id) {
      if (root) {
        throw LoadError("tree: second post (parentless comment) id " + std::to_string(c.id),
                        line_of(lines, i));
      }
      root = i;
    }
  }
  if (!root) throw LoadError("tree: no post (parentless comment)", line_of(lines, 0));

  for (std::size_t i = 0; i < comments.size(); ++i) {
    const Comment& c = comments[i];
    if (!c.parent_id) continue;
    if (*c.parent_id == c.id) {
      throw LoadError("tree: cycle at comment id " + std::to_string(c.id) + " (own parent)",
                      line_of(lines, i));
    }
    auto it = by_id.find(*c.parent_id);
    if (it == by_id.end()) {
      throw LoadError("tree: comment id " + std::to_string(c.id) + " has missing parent " +
                          std::to_string(*c.parent_id),
                      line_of(lines, i));
    }
  }

  // Every comment must reach the post by following parents.
  std::vector<int> state(comments.size(), 0);  // 0 unknown, 1 on stack, 2 reaches root
  state[*root] = 2;
  for (std::size_t start = 0; start < comments.size(); ++start) {
    std::vector<std::size_t> chain;
    std::size_t cur = start;
    while (state[cur] == 0) {
      state[cur] = 1;
      chain.push_back(cur);
      cur = by_id.at(*comments[cur].parent_id);
    }
    if (state[cur] == 1) {
      throw LoadError("tree: cycle through comment id " + std::to_string(comments[cur].id),
                      line_of(lines, cur));
    }
    for (auto c : chain) state[c] = 2;
  }

  for (std::size_t i = 0; i < comments.size(); ++i) {
    const Comment& c = comments[i];
    if (!c.parent_id) continue;
    const Comment& p = comments[by_id.at(*c.parent_id)];
    if (c.timestamp < p.timestamp) {
      throw LoadError("tree: comment id " + std::to_string(c.id) +
                          " is older than its parent " + std::to_string(p.id),
                      line_of(lines, i));
    }
  }

  DiscussionTree tree;
  std::vector<std::size_t> order(comments.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (a == *root || b == *root) return a == *root && b != *root;
    if (comments[a].timestamp != comments[b].timestamp) {
      return comments[a].timestamp < comments[b].timestamp;
    }
    return comments[a].id < comments[b].id;
  });

  const std::size_t n = comments.size();
  tree.nodes_.reserve(n);
  for (auto i : order) tree.nodes_.push_back(std::move(comments[i]));
  tree.id_index_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) tree.id_index_.emplace_back(tree.nodes_[i].id, static_cast<int>(i));
  std::sort(tree.id_index_.begin(), tree.id_index_.end());

  tree.parent_.assign(n, -1);
  tree.children_.assign(n, {});
  for (std::size_t i = 1; i < n; ++i) {
    const int p = *tree.index_of(*tree.nodes_[i].parent_id);
    tree.parent_[i] = p;
    tree.children_[static_cast<std::size_t>(p)].push_back(static_cast<int>(i));
  }

  // Pre-order numbering for O(1) descendant tests.
  tree.enter_.assign(n, 0);
  tree.exit_.assign(n, 0);
  int counter = 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  tree.enter_[0] = counter++;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    const auto& kids = tree.children_[static_cast<std::size_t>(node)];
    if (next < kids.size()) {
      const int child = kids[next++];
      tree.enter_[static_cast<std::size_t>(child)] = counter++;
      stack.emplace_back(child, 0);
    } else {
      tree.exit_[static_cast<std::size_t>(node)] = counter - 1;
      stack.pop_back();
    }
  }
  return tree;
}

std::optional<int> DiscussionTree::index_of(std::int64_t id) const {
  auto it = std::lower_bound(id_index_.begin(), id_index_.end(), std::make_pair(id, -1));
  if (it == id_index_.end() || it->first != id) return std::nullopt;
  return it->second;
}

std::vector<int> DiscussionTree::leaves() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (children_[i].empty()) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> DiscussionTree::path_to(int node) const {
  std::vector<int> path;
  for (int cur = node; cur >= 0; cur = parent_[static_cast<std::size_t>(cur)]) path.push_back(cur);
  std::reverse(path.begin(), path.end());
  return path;
}

namespace {

Comment parse_comment(const std::string& line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("malformed JSON: ") + e.what(), line_no);
  }
  try {
    Comment c;
    c.id = j.at("id").get<std::int64_t>();
    const auto& parent = j.at("parent");
    if (!parent.is_null()) c.parent_id = parent.get<std::int64_t>();
    c.text = j.at("text").get<std::string>();
    c.karma = j.at("karma").get<std::int64_t>();
    c.timestamp = j.at("ts").get<std::int64_t>();
    return c;
  } catch (const json::exception& e) {
    throw LoadError(std::string("bad comment record: ") + e.what(), line_no);
  }
}

void flush_block(std::vector<Comment>& block, std::vector<std::size_t>& lines,
                 std::size_t min_comments, std::vector<DiscussionTree>& out) {
  if (block.empty()) return;
  if (block.front().parent_id) {
    throw LoadError("tree block must start with its post (parent null)", lines.front());
  }
  DiscussionTree tree = DiscussionTree::build(std::move(block), lines);
  if (tree.comment_count() >= min_comments) out.push_back(std::move(tree));
  block.clear();
  lines.clear();
}

}  // namespace

std::vector<DiscussionTree> parse_trees(std::istream& in, std::size_t min_comments) {
  std::vector<DiscussionTree> trees;
  std::vector<Comment> block;
  std::vector<std::size_t> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      flush_block(block, lines, min_comments, trees);
      continue;
    }
    block.push_back(parse_comment(line, line_no));
    lines.push_back(line_no);
  }
  flush_block(block, lines, min_comments, trees);
  return trees;
}

std::vector<DiscussionTree> load_trees(const std::filesystem::path& path,
                                       std::size_t min_comments) {
  namespace fs = std::filesystem;
  auto load_file = [&](const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw LoadError("cannot open tree corpus " + file.string());
    try {
      return parse_trees(in, min_comments);
    } catch (const LoadError& e) {
      throw LoadError(file.string() + ": " + e.what());
    }
  };
  if (!fs::is_directory(path)) return load_file(path);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<DiscussionTree> trees;
  for (const auto& f : files) {
    auto part = load_file(f);
    if (part.size() > 1) throw LoadError(f.string() + ": one-file-per-tree layout holds several trees");
    for (auto& t : part) trees.push_back(std::move(t));
  }
  return trees;
}

void write_trees(std::ostream& out, std::span<const DiscussionTree> trees) {
  for (std::size_t t = 0; t < trees.size(); ++t) {
    if (t) out << '\n';
    const auto& tree = trees[t];
    for (std::size_t i = 0; i < tree.size(); ++i) {
      const Comment& c = tree.node(static_cast<int>(i));
      json j;
      j["id"] = c.id;
      j["parent"] = c.parent_id ? json(*c.parent_id) : json(nullptr);
      j["text"] = c.text;
      j["karma"] = c.karma;
      j["ts"] = c.timestamp;
      out << j.dump() << '\n';
    }
  }
}

}  // namespace threadtrack::env
