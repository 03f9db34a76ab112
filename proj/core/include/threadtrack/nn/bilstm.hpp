#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "threadtrack/nn/params.hpp"
#include "threadtrack/nn/tensor.hpp"

namespace threadtrack::nn {

// One LSTM direction. Gate rows are stacked [input, forget, output, candidate].
struct LstmCell {
  Matrix input_weights;      // 4H x D
  Matrix recurrent_weights;  // 4H x H
  RealVec bias;              // 4H

  void collect_slots(std::vector<ParamSlot>& out, const std::string& prefix);
};

// Bidirectional LSTM over a sequence of vectors. The summary is the final
// forward hidden state followed by the final backward hidden state
// (the backward direction ends on the first element).
class BiLstm {
 public:
  struct Trace {
    // Per processed step, in processing order.
    std::vector<RealVec> gates;  // activated i, f, o, g (4H)
    std::vector<RealVec> cell;   // c_t
    std::vector<RealVec> hidden; // h_t
  };
  struct Cache {
    CacheStamp stamp;
    std::vector<RealVec> inputs;
    Trace forward;
    Trace backward;
  };

  BiLstm() = default;
  BiLstm(std::size_t input_dim, std::size_t hidden_dim);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::size_t summary_dim() const { return 2 * hidden_dim_; }

  LstmCell& forward_cell() { return fwd_; }
  LstmCell& backward_cell() { return bwd_; }
  const LstmCell& forward_cell() const { return fwd_; }
  const LstmCell& backward_cell() const { return bwd_; }

  RealVec forward(std::span<const RealVec> seq, Cache* cache = nullptr) const;

  // Bias plus input projection of one element, per direction. Sequences of
  // projections give the same summary as forward(), bit for bit, and let
  // callers that score many sequences over few distinct elements project
  // each element once. No cache, inference only.
  struct Projection {
    RealVec fwd;
    RealVec bwd;
  };
  Projection project(std::span<const double> x) const;
  RealVec forward_projected(std::span<const Projection* const> seq) const;
  // Accumulates into grads; returns dL/d(seq element) for every element.
  std::vector<RealVec> backward(const Cache& cache, std::span<const double> d_summary,
                                BiLstm& grads) const;

  void collect_slots(std::vector<ParamSlot>& out, const std::string& prefix);
  void touch() { identity_.bump(); }
  CacheStamp stamp() const { return identity_.stamp(); }

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  LstmCell fwd_;
  LstmCell bwd_;
  ParamIdentity identity_;
};

inline std::pair<RealVec, BiLstm::Cache> bilstm_forward(const BiLstm& net,
                                                        std::span<const RealVec> seq) {
  BiLstm::Cache cache;
  RealVec y = net.forward(seq, &cache);
  return {std::move(y), std::move(cache)};
}

inline std::pair<BiLstm, std::vector<RealVec>> bilstm_backward(
    const BiLstm& net, const BiLstm::Cache& cache, std::span<const double> d_summary) {
  BiLstm grads = zeros_like(net);
  auto d_seq = net.backward(cache, d_summary, grads);
  return {std::move(grads), std::move(d_seq)};
}

}  // namespace threadtrack::nn
