#pragma once

#include <string_view>

#include "threadtrack/text/text.hpp"

namespace threadtrack::text {

// Vocabulary plus idf weights, fitted once on the training split and shared
// read-only afterwards.
struct TextEncoder {
  Vocabulary vocab;
  TfIdfIndex index;

  BowVector bow(std::string_view raw) const { return vocab.bow(preprocess(raw)); }
  nn::SparseVector tfidf(const BowVector& b) const { return tfidf_vector(b, index); }

  // Builds the vocabulary from `documents` and fits idf over the same set.
  static TextEncoder fit(const std::vector<std::string>& documents,
                         std::size_t max_vocab = Vocabulary::kDefaultMaxSize);
};

}  // namespace threadtrack::text
