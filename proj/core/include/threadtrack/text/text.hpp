#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "threadtrack/nn/tensor.hpp"

namespace threadtrack::text {

using TokenList = std::vector<std::string>;

// Lowercases ASCII letters, deletes ASCII punctuation and splits on
// whitespace. Bytes >= 0x80 are kept as word characters.
TokenList preprocess(std::string_view text);

// Sparse token counts over a vocabulary.
class BowVector {
 public:
  BowVector() = default;
  explicit BowVector(nn::SparseVector counts) : counts_(std::move(counts)) {}

  const nn::SparseVector& counts() const { return counts_; }
  std::size_t total() const;
  bool empty() const { return counts_.empty(); }
  // Adds `other`'s counts.
  void merge(const BowVector& other);

  friend bool operator==(const BowVector&, const BowVector&) = default;

 private:
  nn::SparseVector counts_;
};

class Vocabulary {
 public:
  static constexpr std::size_t kDefaultMaxSize = 5000;

  Vocabulary() = default;
  // Tokens in index order; must be unique.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  std::optional<std::uint32_t> index_of(std::string_view token) const;

  // Out-of-vocabulary tokens are dropped.
  BowVector bow(const TokenList& tokens) const;

  void dump(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Keeps the `max_size` most frequent tokens; ties go to the lexicographically
// smaller token.
Vocabulary build_vocab(const std::vector<TokenList>& corpus,
                       std::size_t max_size = Vocabulary::kDefaultMaxSize);

// Fraction of corpus tokens missing from the vocabulary.
double oov_rate(const Vocabulary& vocab, const std::vector<TokenList>& corpus);

// Smoothed inverse document frequencies:
//   idf(t) = ln((1 + doc_count) / (1 + df(t))) + 1
class TfIdfIndex {
 public:
  TfIdfIndex() = default;
  TfIdfIndex(std::size_t vocab_size, const std::vector<BowVector>& documents);

  std::size_t doc_count() const { return doc_count_; }
  std::size_t vocab_size() const { return idf_.size(); }
  double idf(std::size_t token) const { return idf_.at(token); }

 private:
  std::size_t doc_count_ = 0;
  std::vector<double> idf_;
};

// weight(t) = raw count(t) * idf(t)
nn::SparseVector tfidf_vector(const BowVector& bow, const TfIdfIndex& index);

// a.b / (|a||b|), 0 when either norm is zero.
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(const nn::SparseVector& a, const nn::SparseVector& b);

}  // namespace threadtrack::text
