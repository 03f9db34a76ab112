#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "threadtrack/nn/params.hpp"
#include "threadtrack/random.hpp"

namespace threadtrack::nn {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_slot;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;

  bool passed(double tol) const { return max_rel_error < tol; }
};

inline double relative_error(double analytic, double numeric) {
  double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

// Compares `analytic` against central differences of `loss` at `params`.
// At most `per_slot` coordinates of each slot are probed (all of them when
// the slot is smaller); `params` is restored before returning.
template <ParameterSet P>
GradCheckReport grad_check(const std::function<double(const P&)>& loss, P& params,
                           const P& analytic, double step = 1e-5,
                           std::size_t per_slot = 16, std::uint64_t seed = 0) {
  auto ps = slots_of(params);
  auto gs = slots_of(analytic);
  check_congruent(ps, gs);
  Rng rng(seed);
  GradCheckReport report;
  for (std::size_t s = 0; s < ps.size(); ++s) {
    auto values = ps[s].values;
    std::vector<std::size_t> coords;
    if (values.size() <= per_slot) {
      for (std::size_t i = 0; i < values.size(); ++i) coords.push_back(i);
    } else {
      for (std::size_t i = 0; i < per_slot; ++i) coords.push_back(uniform_index(rng, values.size()));
    }
    for (std::size_t i : coords) {
      const double saved = values[i];
      values[i] = saved + step;
      params.touch();
      const double up = loss(params);
      values[i] = saved - step;
      params.touch();
      const double down = loss(params);
      values[i] = saved;
      params.touch();
      const double numeric = (up - down) / (2.0 * step);
      const double a = gs[s].values[i];
      const double err = relative_error(a, numeric);
      ++report.coordinates;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_slot = ps[s].name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace threadtrack::nn
