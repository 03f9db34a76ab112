#include "threadtrack/env/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "threadtrack/error.hpp"
#include "threadtrack/random.hpp"
#include "threadtrack/text/text.hpp"

namespace threadtrack::env {
namespace {

using nlohmann::json;

constexpr std::int64_t kCommentSpan = 18 * 3600;
constexpr std::int64_t kIdStride = 1000000;
constexpr double kDuplicateEdit = 0.15;

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("generator config: " + what);
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

void GeneratorConfig::validate() const {
  require(trees >= 1, "trees must be >= 1");
  require(mean_size >= 2, "mean_size must be >= 2");
  require(branching >= 0.0 && branching <= 1.0, "branching must lie in [0, 1]");
  require(reply_bias >= 0.0, "reply_bias must be >= 0");
  require(topic_words >= 0, "topic_words must be >= 0");
  require(topic_rate >= 0.0 && trend_rate >= 0.0 && topic_rate + trend_rate <= 1.0,
          "topic_rate and trend_rate must be non-negative with sum <= 1");
  require(topic_words > 0 || topic_rate == 0.0, "topic_rate > 0 needs topic_words > 0");
  require(karma_noise >= 0.0, "karma_noise must be >= 0");
  require(duplicate_rate >= 0.0 && duplicate_rate <= 1.0, "duplicate_rate must lie in [0, 1]");
  require(duplicate_penalty >= 0.0, "duplicate_penalty must be >= 0");
  require(vocab_size >= 1, "vocab_size must be >= 1");
  require(words_per_comment >= 1, "words_per_comment must be >= 1");
  require(trend_groups >= 0, "trend_groups must be >= 0");
  require(trend_groups == 0 || trend_words >= 1, "trend_words must be >= 1");
  require(days >= 1, "days must be >= 1");
  require(docs_per_day >= 0, "docs_per_day must be >= 0");
  require(std::isfinite(topic_bonus) && std::isfinite(trend_bonus), "bonuses must be finite");
}

GeneratorConfig parse_generator_config(const std::string& json_text) {
  GeneratorConfig cfg;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("generator config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("generator config: expected a JSON object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& k = it.key();
      const auto& v = it.value();
      if (k == "trees") cfg.trees = v.get<int>();
      else if (k == "mean_size") cfg.mean_size = v.get<int>();
      else if (k == "branching") cfg.branching = v.get<double>();
      else if (k == "reply_bias") cfg.reply_bias = v.get<double>();
      else if (k == "topic_words") cfg.topic_words = v.get<int>();
      else if (k == "topic_rate") cfg.topic_rate = v.get<double>();
      else if (k == "topic_bonus") cfg.topic_bonus = v.get<double>();
      else if (k == "karma_noise") cfg.karma_noise = v.get<double>();
      else if (k == "duplicate_rate") cfg.duplicate_rate = v.get<double>();
      else if (k == "duplicate_penalty") cfg.duplicate_penalty = v.get<double>();
      else if (k == "vocab_size") cfg.vocab_size = v.get<int>();
      else if (k == "words_per_comment") cfg.words_per_comment = v.get<int>();
      else if (k == "trend_groups") cfg.trend_groups = v.get<int>();
      else if (k == "trend_words") cfg.trend_words = v.get<int>();
      else if (k == "trend_rate") cfg.trend_rate = v.get<double>();
      else if (k == "trend_bonus") cfg.trend_bonus = v.get<double>();
      else if (k == "days") cfg.days = v.get<int>();
      else if (k == "docs_per_day") cfg.docs_per_day = v.get<int>();
      else if (k == "seed") cfg.seed = v.get<std::uint64_t>();
      else throw ConfigError("generator config: unknown key '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("generator config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

GeneratorConfig load_generator_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open generator config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_generator_config(ss.str());
}

std::string to_json(const GeneratorConfig& cfg) {
  json j = {{"trees", cfg.trees},
            {"mean_size", cfg.mean_size},
            {"branching", cfg.branching},
            {"reply_bias", cfg.reply_bias},
            {"topic_words", cfg.topic_words},
            {"topic_rate", cfg.topic_rate},
            {"topic_bonus", cfg.topic_bonus},
            {"karma_noise", cfg.karma_noise},
            {"duplicate_rate", cfg.duplicate_rate},
            {"duplicate_penalty", cfg.duplicate_penalty},
            {"vocab_size", cfg.vocab_size},
            {"words_per_comment", cfg.words_per_comment},
            {"trend_groups", cfg.trend_groups},
            {"trend_words", cfg.trend_words},
            {"trend_rate", cfg.trend_rate},
            {"trend_bonus", cfg.trend_bonus},
            {"days", cfg.days},
            {"docs_per_day", cfg.docs_per_day},
            {"seed", cfg.seed}};
  return j.dump(2);
}

std::string filler_word(int i) { return "word" + std::to_string(i); }
std::string topic_word(int i) { return "topic" + std::to_string(i); }
std::string trend_word(int group, int i) {
  return "g" + std::to_string(group) + "t" + std::to_string(i);
}

int hot_group(const GeneratorConfig& cfg, int day) {
  if (cfg.trend_groups <= 0) return -1;
  Rng rng(derive_seed(derive_seed(cfg.seed, 0x74726e64), static_cast<std::uint64_t>(day)));
  return static_cast<int>(uniform_index(rng, static_cast<std::size_t>(cfg.trend_groups)));
}

std::vector<DiscussionTree> generate_synthetic(GeneratorConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

std::vector<DiscussionTree> generate_synthetic(const GeneratorConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0x74726565));
  std::vector<DiscussionTree> out;
  out.reserve(static_cast<std::size_t>(cfg.trees));

  auto filler = [&] { return filler_word(static_cast<int>(uniform_index(rng, cfg.vocab_size))); };

  for (int t = 0; t < cfg.trees; ++t) {
    const int day = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(cfg.days)));
    const int hot = hot_group(cfg, day);
    const int lo = std::max(1, cfg.mean_size / 2);
    const int hi = std::max(lo, cfg.mean_size + cfg.mean_size / 2);
    const int size = lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo + 1)));

    const std::int64_t base_id = static_cast<std::int64_t>(t + 1) * kIdStride;
    const std::int64_t post_ts = static_cast<std::int64_t>(day) * 86400 + 3 * 3600 +
                                 static_cast<std::int64_t>(uniform_real(rng, 0.0, 3 * 3600.0));

    std::vector<Comment> comments;
    std::vector<std::vector<std::string>> words;
    std::vector<std::vector<int>> kids;
    comments.reserve(static_cast<std::size_t>(size) + 1);
    {
      std::vector<std::string> w;
      for (int i = 0; i < cfg.words_per_comment; ++i) w.push_back(filler());
      comments.push_back({base_id, std::nullopt, join(w), 0, post_ts});
      words.push_back(std::move(w));
      kids.emplace_back();
    }

    const double slot = static_cast<double>(kCommentSpan) / size;
    std::vector<double> weight;
    for (int j = 1; j <= size; ++j) {
      const std::int64_t ts =
          post_ts + 1 + static_cast<std::int64_t>((j - 1 + uniform_real(rng, 0.0, 1.0)) * slot);

      int parent = 0;
      if (j > 1 && uniform_real(rng, 0.0, 1.0) < cfg.branching) {
        double total = 0.0;
        for (double w : weight) total += w;
        double u = uniform_real(rng, 0.0, total);
        parent = static_cast<int>(weight.size());
        for (std::size_t i = 0; i < weight.size(); ++i) {
          u -= weight[i];
          if (u < 0.0) {
            parent = static_cast<int>(i) + 1;
            break;
          }
        }
        parent = std::min(parent, static_cast<int>(weight.size()));
      }

      std::vector<std::string> w;
      double karma = cfg.karma_noise * standard_normal(rng);
      const auto& sibs = kids[static_cast<std::size_t>(parent)];
      if (!sibs.empty() && uniform_real(rng, 0.0, 1.0) < cfg.duplicate_rate) {
        // Near-copy of an earlier sibling; restating it earns nothing extra.
        karma -= cfg.duplicate_penalty;
        w = words[static_cast<std::size_t>(sibs[uniform_index(rng, sibs.size())])];
        for (auto& tok : w) {
          if (uniform_real(rng, 0.0, 1.0) < kDuplicateEdit) tok = filler();
        }
      } else {
        const int len_lo = std::max(1, cfg.words_per_comment * 3 / 4);
        const int len_hi = std::max(len_lo, cfg.words_per_comment * 5 / 4);
        const int len =
            len_lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(len_hi - len_lo + 1)));
        for (int i = 0; i < len; ++i) {
          const double u = uniform_real(rng, 0.0, 1.0);
          if (u < cfg.topic_rate) {
            w.push_back(topic_word(static_cast<int>(uniform_index(rng, cfg.topic_words))));
            karma += cfg.topic_bonus;
          } else if (cfg.trend_groups > 0 && u < cfg.topic_rate + cfg.trend_rate) {
            const int g = static_cast<int>(uniform_index(rng, cfg.trend_groups));
            w.push_back(trend_word(g, static_cast<int>(uniform_index(rng, cfg.trend_words))));
            if (g == hot) karma += cfg.trend_bonus;
          } else {
            w.push_back(filler());
          }
        }
      }
      const auto k = static_cast<std::int64_t>(std::llround(karma));
      comments.push_back({base_id + j, comments[static_cast<std::size_t>(parent)].id, join(w), k, ts});
      words.push_back(std::move(w));
      kids.emplace_back();
      kids[static_cast<std::size_t>(parent)].push_back(j);
      weight.push_back(1.0 + cfg.reply_bias * std::max<double>(0.0, static_cast<double>(k)));
    }
    out.push_back(DiscussionTree::build(std::move(comments)));
  }
  return out;
}

double token_overlap(const std::string& a, const std::string& b) {
  const auto ta = text::preprocess(a);
  const auto tb = text::preprocess(b);
  std::set<std::string> sa(ta.begin(), ta.end());
  std::set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() || sb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  return static_cast<double>(common) / static_cast<double>(std::min(sa.size(), sb.size()));
}

}  // namespace threadtrack::env
