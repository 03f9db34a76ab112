#include "threadtrack/nn/bilstm.hpp"

#include <cmath>

namespace threadtrack::nn {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One LSTM step from the pre-activation `pre` (bias + input projection,
// recurrent term still to add). Leaves activated gates in `pre`.
void lstm_step(const LstmCell& cell, std::size_t hidden, RealVec& pre, RealVec& h, RealVec& c) {
  gemv_add(cell.recurrent_weights, h, pre);
  for (std::size_t j = 0; j < hidden; ++j) {
    const double i_g = sigmoid(pre[j]);
    const double f_g = sigmoid(pre[hidden + j]);
    const double o_g = sigmoid(pre[2 * hidden + j]);
    const double g_g = std::tanh(pre[3 * hidden + j]);
    pre[j] = i_g;
    pre[hidden + j] = f_g;
    pre[2 * hidden + j] = o_g;
    pre[3 * hidden + j] = g_g;
    c[j] = f_g * c[j] + i_g * g_g;
    h[j] = o_g * std::tanh(c[j]);
  }
}

void project_into(const LstmCell& cell, std::span<const double> x, RealVec& pre) {
  std::copy(cell.bias.begin(), cell.bias.end(), pre.begin());
  gemv_add(cell.input_weights, x, pre);
}

// Runs one direction over seq and returns the final hidden state.
RealVec run_direction(const LstmCell& cell, std::size_t hidden,
                      std::span<const RealVec> seq, bool reverse, BiLstm::Trace* trace) {
  RealVec h(hidden, 0.0);
  RealVec c(hidden, 0.0);
  RealVec pre(4 * hidden);
  const std::size_t n = seq.size();
  for (std::size_t step = 0; step < n; ++step) {
    project_into(cell, seq[reverse ? n - 1 - step : step], pre);
    lstm_step(cell, hidden, pre, h, c);
    if (trace) {
      trace->gates.push_back(pre);
      trace->cell.push_back(c);
      trace->hidden.push_back(h);
    }
  }
  return h;
}

void backprop_direction(const LstmCell& cell, LstmCell& grads, std::size_t hidden,
                        const std::vector<RealVec>& inputs, bool reverse,
                        const BiLstm::Trace& trace, std::span<const double> d_final,
                        std::vector<RealVec>& d_inputs) {
  const std::size_t n = inputs.size();
  RealVec dh(d_final.begin(), d_final.end());
  RealVec dc(hidden, 0.0);
  RealVec da(4 * hidden);
  const RealVec zeros(hidden, 0.0);
  for (std::size_t step = n; step-- > 0;) {
    const std::size_t pos = reverse ? n - 1 - step : step;
    const RealVec& gates = trace.gates[step];
    const RealVec& c = trace.cell[step];
    const RealVec& c_prev = step > 0 ? trace.cell[step - 1] : zeros;
    const RealVec& h_prev = step > 0 ? trace.hidden[step - 1] : zeros;
    for (std::size_t j = 0; j < hidden; ++j) {
      const double i_g = gates[j];
      const double f_g = gates[hidden + j];
      const double o_g = gates[2 * hidden + j];
      const double g_g = gates[3 * hidden + j];
      const double tc = std::tanh(c[j]);
      const double d_o = dh[j] * tc;
      dc[j] += dh[j] * o_g * (1.0 - tc * tc);
      const double d_i = dc[j] * g_g;
      const double d_g = dc[j] * i_g;
      const double d_f = dc[j] * c_prev[j];
      da[j] = d_i * i_g * (1.0 - i_g);
      da[hidden + j] = d_f * f_g * (1.0 - f_g);
      da[2 * hidden + j] = d_o * o_g * (1.0 - o_g);
      da[3 * hidden + j] = d_g * (1.0 - g_g * g_g);
      dc[j] *= f_g;
    }
    outer_add(grads.input_weights, da, inputs[pos]);
    outer_add(grads.recurrent_weights, da, h_prev);
    axpy(1.0, da, grads.bias);
    gemv_t_add(cell.input_weights, da, d_inputs[pos]);
    std::fill(dh.begin(), dh.end(), 0.0);
    gemv_t_add(cell.recurrent_weights, da, dh);
  }
}

}  // namespace

void LstmCell::collect_slots(std::vector<ParamSlot>& out, const std::string& prefix) {
  out.push_back({prefix + "input_weights", {input_weights.rows(), input_weights.cols()},
                 input_weights.values()});
  out.push_back({prefix + "recurrent_weights",
                 {recurrent_weights.rows(), recurrent_weights.cols()},
                 recurrent_weights.values()});
  out.push_back({prefix + "bias", {bias.size()}, bias});
}

BiLstm::BiLstm(std::size_t input_dim, std::size_t hidden_dim)
    : input_dim_(input_dim), hidden_dim_(hidden_dim) {
  if (input_dim == 0 || hidden_dim == 0) throw DimensionError("bilstm: zero dimension");
  for (LstmCell* cell : {&fwd_, &bwd_}) {
    cell->input_weights = Matrix(4 * hidden_dim, input_dim);
    cell->recurrent_weights = Matrix(4 * hidden_dim, hidden_dim);
    cell->bias.assign(4 * hidden_dim, 0.0);
  }
}

BiLstm::Projection BiLstm::project(std::span<const double> x) const {
  if (x.size() != input_dim_) throw DimensionError("bilstm: element dimension mismatch");
  Projection p{RealVec(4 * hidden_dim_), RealVec(4 * hidden_dim_)};
  project_into(fwd_, x, p.fwd);
  project_into(bwd_, x, p.bwd);
  return p;
}

RealVec BiLstm::forward_projected(std::span<const Projection* const> seq) const {
  if (seq.empty()) throw DimensionError("bilstm: empty sequence");
  const std::size_t n = seq.size();
  RealVec out(2 * hidden_dim_);
  RealVec pre(4 * hidden_dim_);
  RealVec h(hidden_dim_), c(hidden_dim_);
  for (int dir = 0; dir < 2; ++dir) {
    std::fill(h.begin(), h.end(), 0.0);
    std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t step = 0; step < n; ++step) {
      const Projection& p = *seq[dir == 0 ? step : n - 1 - step];
      const RealVec& src = dir == 0 ? p.fwd : p.bwd;
      if (src.size() != pre.size()) throw DimensionError("bilstm: projection size mismatch");
      std::copy(src.begin(), src.end(), pre.begin());
      lstm_step(dir == 0 ? fwd_ : bwd_, hidden_dim_, pre, h, c);
    }
    std::copy(h.begin(), h.end(), out.begin() + static_cast<std::ptrdiff_t>(dir * hidden_dim_));
  }
  return out;
}

RealVec BiLstm::forward(std::span<const RealVec> seq, Cache* cache) const {
  if (seq.empty()) throw DimensionError("bilstm: empty sequence");
  for (const auto& x : seq) {
    if (x.size() != input_dim_) throw DimensionError("bilstm: element dimension mismatch");
  }
  if (cache) {
    cache->stamp = stamp();
    cache->inputs.assign(seq.begin(), seq.end());
    cache->forward = {};
    cache->backward = {};
  }
  RealVec hf = run_direction(fwd_, hidden_dim_, seq, false, cache ? &cache->forward : nullptr);
  RealVec hb = run_direction(bwd_, hidden_dim_, seq, true, cache ? &cache->backward : nullptr);
  hf.insert(hf.end(), hb.begin(), hb.end());
  return hf;
}

std::vector<RealVec> BiLstm::backward(const Cache& cache, std::span<const double> d_summary,
                                      BiLstm& grads) const {
  check_stamp(cache.stamp, stamp(), "bilstm backward");
  if (d_summary.size() != summary_dim()) throw DimensionError("bilstm: gradient dimension mismatch");
  if (grads.hidden_dim_ != hidden_dim_ || grads.input_dim_ != input_dim_) {
    throw DimensionError("bilstm: gradient set shape mismatch");
  }
  std::vector<RealVec> d_inputs(cache.inputs.size(), RealVec(input_dim_, 0.0));
  backprop_direction(fwd_, grads.fwd_, hidden_dim_, cache.inputs, false, cache.forward,
                     d_summary.subspan(0, hidden_dim_), d_inputs);
  backprop_direction(bwd_, grads.bwd_, hidden_dim_, cache.inputs, true, cache.backward,
                     d_summary.subspan(hidden_dim_), d_inputs);
  return d_inputs;
}

void BiLstm::collect_slots(std::vector<ParamSlot>& out, const std::string& prefix) {
  fwd_.collect_slots(out, prefix + "forward.");
  bwd_.collect_slots(out, prefix + "backward.");
}

}  // namespace threadtrack::nn
