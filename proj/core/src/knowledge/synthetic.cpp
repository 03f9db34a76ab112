#include "threadtrack/knowledge/synthetic.hpp"

#include <string>

#include "threadtrack/random.hpp"

namespace threadtrack::knowledge {
namespace {

constexpr std::int64_t kDocIdBase = 900000000;
constexpr int kDocWords = 12;

}  // namespace

std::vector<KnowledgeRecord> generate_knowledge(const env::GeneratorConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0x6b6e6f77));
  std::vector<KnowledgeRecord> out;
  std::int64_t next_id = kDocIdBase;

  auto text_about = [&](int group) {
    std::string s;
    for (int i = 0; i < kDocWords; ++i) {
      if (!s.empty()) s += ' ';
      if (group >= 0 && i % 2 == 0) {
        s += env::trend_word(group, static_cast<int>(uniform_index(rng, cfg.trend_words)));
      } else {
        s += env::filler_word(static_cast<int>(uniform_index(rng, cfg.vocab_size)));
      }
    }
    return s;
  };

  for (int day = 0; day < cfg.days; ++day) {
    const int hot = env::hot_group(cfg, day);
    for (int d = 0; d < cfg.docs_per_day; ++d) {
      int group = -1;
      if (cfg.trend_groups > 0) {
        group = d == 0 ? hot : static_cast<int>(uniform_index(rng, cfg.trend_groups));
      }
      KnowledgeRecord r;
      r.id = next_id++;
      r.ts = static_cast<std::int64_t>(day) * 86400 +
             static_cast<std::int64_t>(uniform_real(rng, 0.0, 2 * 3600.0));
      r.post_text = text_about(group);
      const bool headline = d == 0;
      r.post_karma = headline ? 300 + static_cast<std::int64_t>(uniform_index(rng, 100))
                              : 20 + static_cast<std::int64_t>(uniform_index(rng, 120));
      for (int c = 0; c < 6; ++c) {
        const std::int64_t karma = headline ? 20 + static_cast<std::int64_t>(uniform_index(rng, 40))
                                            : static_cast<std::int64_t>(uniform_index(rng, 20));
        r.comments.push_back({text_about(group), karma});
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace threadtrack::knowledge
