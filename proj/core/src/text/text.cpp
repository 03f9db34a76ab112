#include "threadtrack/text/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "threadtrack/error.hpp"

namespace threadtrack::text {

TokenList preprocess(std::string_view text) {
  TokenList tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (c < 0x80 && std::ispunct(c)) {
      continue;
    } else if (c < 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::size_t BowVector::total() const {
  double s = 0.0;
  for (const auto& e : counts_.entries()) s += e.value;
  return static_cast<std::size_t>(s);
}

void BowVector::merge(const BowVector& other) {
  std::vector<nn::SparseEntry> all(counts_.entries().begin(), counts_.entries().end());
  all.insert(all.end(), other.counts_.entries().begin(), other.counts_.entries().end());
  counts_ = nn::SparseVector(std::move(all));
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<std::uint32_t>(i)).second) {
      throw ConfigError("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }
}

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

BowVector Vocabulary::bow(const TokenList& tokens) const {
  std::vector<nn::SparseEntry> entries;
  entries.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (auto idx = index_of(t)) entries.push_back({*idx, 1.0});
  }
  return BowVector(nn::SparseVector(std::move(entries)));
}

void Vocabulary::dump(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary build_vocab(const std::vector<TokenList>& corpus, std::size_t max_size) {
  std::map<std::string, std::size_t> freq;
  for (const auto& doc : corpus) {
    for (const auto& t : doc) ++freq[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size) ranked.resize(max_size);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [t, n] : ranked) tokens.push_back(t);
  return Vocabulary(std::move(tokens));
}

double oov_rate(const Vocabulary& vocab, const std::vector<TokenList>& corpus) {
  std::size_t total = 0, missing = 0;
  for (const auto& doc : corpus) {
    for (const auto& t : doc) {
      ++total;
      if (!vocab.index_of(t)) ++missing;
    }
  }
  return total ? static_cast<double>(missing) / static_cast<double>(total) : 0.0;
}

TfIdfIndex::TfIdfIndex(std::size_t vocab_size, const std::vector<BowVector>& documents)
    : doc_count_(documents.size()), idf_(vocab_size, 0.0) {
  std::vector<std::size_t> df(vocab_size, 0);
  for (const auto& doc : documents) {
    for (const auto& e : doc.counts().entries()) {
      if (e.index >= vocab_size) throw DimensionError("tf-idf: token index outside vocabulary");
      ++df[e.index];
    }
  }
  const double n = static_cast<double>(doc_count_);
  for (std::size_t t = 0; t < vocab_size; ++t) {
    idf_[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[t]))) + 1.0;
  }
}

nn::SparseVector tfidf_vector(const BowVector& bow, const TfIdfIndex& index) {
  std::vector<nn::SparseEntry> out;
  out.reserve(bow.counts().nnz());
  for (const auto& e : bow.counts().entries()) {
    out.push_back({e.index, e.value * index.idf(e.index)});
  }
  return nn::SparseVector(std::move(out));
}

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = nn::norm(a);
  const double nb = nn::norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(nn::dot(a, b) / (na * nb), -1.0, 1.0);
}

double cosine(const nn::SparseVector& a, const nn::SparseVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(nn::dot(a, b) / (na * nb), -1.0, 1.0);
}

}  // namespace threadtrack::text

#include "threadtrack/text/encoder.hpp"

namespace threadtrack::text {

TextEncoder TextEncoder::fit(const std::vector<std::string>& documents, std::size_t max_vocab) {
  std::vector<TokenList> tokens;
  tokens.reserve(documents.size());
  for (const auto& d : documents) tokens.push_back(preprocess(d));
  TextEncoder enc;
  enc.vocab = build_vocab(tokens, max_vocab);
  std::vector<BowVector> bows;
  bows.reserve(tokens.size());
  for (const auto& t : tokens) bows.push_back(enc.vocab.bow(t));
  enc.index = TfIdfIndex(enc.vocab.size(), bows);
  return enc;
}

}  // namespace threadtrack::text
