#pragma once

#include <vector>

#include "threadtrack/env/synthetic.hpp"
#include "threadtrack/knowledge/store.hpp"

namespace threadtrack::knowledge {

// News-style documents matching a synthetic discussion corpus: each day opens
// with `docs_per_day` posts published in its first two hours. The first one
// covers the day's hot trend group and is markedly more popular than the rest.
std::vector<KnowledgeRecord> generate_knowledge(const env::GeneratorConfig& cfg);

}  // namespace threadtrack::knowledge
