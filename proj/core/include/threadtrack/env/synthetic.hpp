#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "threadtrack/env/tree.hpp"

namespace threadtrack::env {

// Knobs of the synthetic discussion generator. Karma of a comment is
//   round(noise) + topic_bonus * #topic words + trend_bonus * #hot-group words
// where the hot trend group changes from day to day. Near-duplicate replies
// carry noise-only karma minus duplicate_penalty.
struct GeneratorConfig {
  int trees = 200;
  int mean_size = 120;         // comments per tree; sizes uniform in [mean/2, 3*mean/2]
  double branching = 0.7;      // probability a comment replies to another comment
  double reply_bias = 0.05;    // extra parent weight per karma point
  int topic_words = 12;
  double topic_rate = 0.08;    // per-token probability of a topic word
  double topic_bonus = 10.0;
  double karma_noise = 4.0;
  double duplicate_rate = 0.0;
  double duplicate_penalty = 0.0;
  int vocab_size = 400;        // filler words
  int words_per_comment = 12;
  int trend_groups = 0;
  int trend_words = 6;         // words per trend group
  double trend_rate = 0.08;
  double trend_bonus = 10.0;
  int days = 30;
  int docs_per_day = 4;
  std::uint64_t seed = 1;

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

GeneratorConfig load_generator_config(const std::filesystem::path& path);
GeneratorConfig parse_generator_config(const std::string& json_text);
std::string to_json(const GeneratorConfig& cfg);

// Vocabulary conventions shared with the knowledge generator.
std::string filler_word(int i);
std::string topic_word(int i);
std::string trend_word(int group, int i);
// Hot trend group of a day (-1 when the corpus has no trend groups).
int hot_group(const GeneratorConfig& cfg, int day);

std::vector<DiscussionTree> generate_synthetic(const GeneratorConfig& cfg);
std::vector<DiscussionTree> generate_synthetic(GeneratorConfig cfg, std::uint64_t seed);

// Token-set overlap |A n B| / min(|A|, |B|) of two comment texts.
double token_overlap(const std::string& a, const std::string& b);

}  // namespace threadtrack::env
