#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "threadtrack/error.hpp"

namespace threadtrack::nn {

// A named, shaped view onto one learnable array inside a parameter set.
struct ParamSlot {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<double> values;
};

// Identity of a parameter set as seen by forward caches. Copies receive a
// fresh id; every update bumps the version.
struct CacheStamp {
  std::uint64_t id = 0;
  std::uint64_t version = 0;
  friend bool operator==(const CacheStamp&, const CacheStamp&) = default;
};

class ParamIdentity {
 public:
  ParamIdentity() : id_(next_id()) {}
  ParamIdentity(const ParamIdentity&) : id_(next_id()) {}
  ParamIdentity(ParamIdentity&&) noexcept : id_(next_id()) {}
  ParamIdentity& operator=(const ParamIdentity&) {
    ++version_;
    return *this;
  }
  ParamIdentity& operator=(ParamIdentity&&) noexcept {
    ++version_;
    return *this;
  }

  CacheStamp stamp() const { return {id_, version_}; }
  void bump() { ++version_; }

 private:
  static std::uint64_t next_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
  }
  std::uint64_t id_;
  std::uint64_t version_ = 0;
};

inline void check_stamp(const CacheStamp& cache, const CacheStamp& params,
                        const char* what) {
  if (cache != params) {
    throw StaleCacheError(std::string(what) +
                          ": cache does not belong to the current parameters");
  }
}

// Parameter sets expose their arrays as slots and can invalidate caches.
// Gradient sets use the same type as the parameters they differentiate.
template <class P>
concept ParameterSet = requires(P& p, std::vector<ParamSlot>& out) {
  p.collect_slots(out, std::string{});
  p.touch();
};

template <ParameterSet P>
std::vector<ParamSlot> slots_of(P& p) {
  std::vector<ParamSlot> out;
  p.collect_slots(out, "");
  return out;
}

template <ParameterSet P>
std::vector<ParamSlot> slots_of(const P& p) {
  return slots_of(const_cast<P&>(p));
}

template <ParameterSet P>
std::size_t parameter_count(const P& p) {
  std::size_t n = 0;
  for (const auto& s : slots_of(p)) n += s.values.size();
  return n;
}

template <ParameterSet P>
P zeros_like(const P& p) {
  P z = p;
  for (auto& s : slots_of(z)) std::fill(s.values.begin(), s.values.end(), 0.0);
  z.touch();
  return z;
}

template <ParameterSet P>
void set_zero(P& p) {
  for (auto& s : slots_of(p)) std::fill(s.values.begin(), s.values.end(), 0.0);
  p.touch();
}

inline void check_congruent(const std::vector<ParamSlot>& a,
                            const std::vector<ParamSlot>& b) {
  if (a.size() != b.size()) throw DimensionError("parameter sets differ in slot count");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].shape != b[i].shape || a[i].values.size() != b[i].values.size()) {
      throw DimensionError("parameter slot '" + a[i].name + "' shape mismatch");
    }
  }
}

// p <- p - eta * g for every parameter.
template <ParameterSet P>
void sgd_step(P& params, const P& grads, double eta) {
  auto ps = slots_of(params);
  auto gs = slots_of(grads);
  check_congruent(ps, gs);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto& p = ps[i].values;
    const auto& g = gs[i].values;
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= eta * g[j];
  }
  params.touch();
}

// acc += alpha * g
template <ParameterSet P>
void accumulate(P& acc, const P& g, double alpha = 1.0) {
  auto as = slots_of(acc);
  auto gs = slots_of(g);
  check_congruent(as, gs);
  for (std::size_t i = 0; i < as.size(); ++i) {
    for (std::size_t j = 0; j < as[i].values.size(); ++j) {
      as[i].values[j] += alpha * gs[i].values[j];
    }
  }
}

template <ParameterSet P>
bool all_finite(const P& p) {
  for (const auto& s : slots_of(p)) {
    for (double v : s.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

template <ParameterSet P>
bool bit_equal(const P& a, const P& b) {
  auto as = slots_of(a);
  auto bs = slots_of(b);
  if (as.size() != bs.size()) return false;
  for (std::size_t i = 0; i < as.size(); ++i) {
    if (as[i].shape != bs[i].shape) return false;
    if (!std::equal(as[i].values.begin(), as[i].values.end(), bs[i].values.begin(),
                    bs[i].values.end(), [](double x, double y) {
                      return std::bit_cast<std::uint64_t>(x) ==
                             std::bit_cast<std::uint64_t>(y);
                    })) {
      return false;
    }
  }
  return true;
}

}  // namespace threadtrack::nn
