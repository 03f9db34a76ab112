#pragma once

#include "threadtrack/nn/params.hpp"
#include "threadtrack/random.hpp"

namespace threadtrack::nn {

inline constexpr double kDefaultInitRange = 0.1;

// Fills every parameter with U[-range, range].
template <ParameterSet P>
void init_uniform(P& params, Rng& rng, double range = kDefaultInitRange) {
  std::uniform_real_distribution<double> dist(-range, range);
  for (auto& s : slots_of(params)) {
    for (double& v : s.values) v = dist(rng);
  }
  params.touch();
}

}  // namespace threadtrack::nn
