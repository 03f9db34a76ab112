#include "threadtrack/nn/layers.hpp"

#include <cmath>

namespace threadtrack::nn {
namespace {

void apply_activation(Activation act, RealVec& v) {
  if (act == Activation::kTanh) {
    for (double& x : v) x = std::tanh(x);
  }
}

// dL/dpre from dL/dout and the activated output.
RealVec activation_delta(Activation act, std::span<const double> out,
                         std::span<const double> d_out) {
  RealVec delta(d_out.begin(), d_out.end());
  if (act == Activation::kTanh) {
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= 1.0 - out[i] * out[i];
  }
  return delta;
}

template <class Input>
RealVec dense_apply(const DenseLayer& layer, const Input& x) {
  RealVec y = layer.bias;
  gemv_add(layer.weights, x, y);
  apply_activation(layer.activation, y);
  return y;
}

void slot(std::vector<ParamSlot>& out, const std::string& name, Matrix& m) {
  out.push_back({name, {m.rows(), m.cols()}, m.values()});
}

void slot(std::vector<ParamSlot>& out, const std::string& name, RealVec& v) {
  out.push_back({name, {v.size()}, v});
}

}  // namespace

DenseLayer::DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation act)
    : weights(out_dim, in_dim), bias(out_dim, 0.0), activation(act) {}

RealVec DenseLayer::forward(std::span<const double> x, Cache* cache) const {
  if (x.size() != in_dim()) throw DimensionError("dense layer: input dimension mismatch");
  RealVec y = dense_apply(*this, x);
  if (cache) {
    cache->stamp = stamp();
    cache->input.assign(x.begin(), x.end());
    cache->output = y;
  }
  return y;
}

RealVec DenseLayer::backward(const Cache& cache, std::span<const double> d_out,
                             DenseLayer& grads) const {
  check_stamp(cache.stamp, stamp(), "dense layer backward");
  if (d_out.size() != out_dim()) throw DimensionError("dense layer: gradient dimension mismatch");
  RealVec delta = activation_delta(activation, cache.output, d_out);
  outer_add(grads.weights, delta, cache.input);
  axpy(1.0, delta, grads.bias);
  RealVec d_in(in_dim(), 0.0);
  gemv_t_add(weights, delta, d_in);
  return d_in;
}

void DenseLayer::collect_slots(std::vector<ParamSlot>& out, const std::string& prefix) {
  slot(out, prefix + "weights", weights);
  slot(out, prefix + "bias", bias);
}

FeedForwardNet::FeedForwardNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].bias.size() != layers_[i].out_dim()) {
      throw DimensionError("feed-forward: bias length differs from weight rows");
    }
    if (i > 0 && layers_[i].in_dim() != layers_[i - 1].out_dim()) {
      throw DimensionError("feed-forward: layer " + std::to_string(i) +
                           " does not chain with its predecessor");
    }
  }
}

FeedForwardNet FeedForwardNet::mlp(std::size_t in, std::size_t hidden,
                                   std::size_t hidden_layers, std::size_t out) {
  std::vector<DenseLayer> layers;
  std::size_t prev = in;
  for (std::size_t i = 0; i < hidden_layers; ++i) {
    layers.emplace_back(prev, hidden, Activation::kTanh);
    prev = hidden;
  }
  layers.emplace_back(prev, out, Activation::kIdentity);
  return FeedForwardNet(std::move(layers));
}

template <class Input>
RealVec FeedForwardNet::run(const Input& x, Cache* cache) const {
  if (layers_.empty()) throw DimensionError("feed-forward: empty network");
  if (cache) {
    cache->stamp = stamp();
    cache->outputs.clear();
    cache->outputs.reserve(layers_.size());
  }
  RealVec h = dense_apply(layers_.front(), x);
  if (cache) cache->outputs.push_back(h);
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    h = dense_apply(layers_[i], std::span<const double>(h));
    if (cache) cache->outputs.push_back(h);
  }
  return h;
}

RealVec FeedForwardNet::forward(std::span<const double> x, Cache* cache) const {
  if (x.size() != in_dim()) {
    throw DimensionError("feed-forward: input length " + std::to_string(x.size()) +
                         " != " + std::to_string(in_dim()));
  }
  RealVec y = run(x, cache);
  if (cache) {
    cache->sparse = false;
    cache->dense_input.assign(x.begin(), x.end());
    cache->sparse_input = {};
  }
  return y;
}

RealVec FeedForwardNet::forward(const SparseVector& x, Cache* cache) const {
  if (x.min_dim() > in_dim()) throw DimensionError("feed-forward: sparse index out of range");
  RealVec y = run(x, cache);
  if (cache) {
    cache->sparse = true;
    cache->sparse_input = x;
    cache->dense_input.clear();
  }
  return y;
}

RealVec FeedForwardNet::backward(const Cache& cache, std::span<const double> d_out,
                                 FeedForwardNet& grads, bool want_input_grad) const {
  check_stamp(cache.stamp, stamp(), "feed-forward backward");
  if (cache.outputs.size() != layers_.size()) throw StaleCacheError("feed-forward: cache depth mismatch");
  if (d_out.size() != out_dim()) throw DimensionError("feed-forward: gradient dimension mismatch");
  if (grads.layers_.size() != layers_.size()) throw DimensionError("feed-forward: gradient set shape mismatch");

  RealVec d(d_out.begin(), d_out.end());
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const DenseLayer& layer = layers_[li];
    DenseLayer& g = grads.layers_[li];
    RealVec delta = activation_delta(layer.activation, cache.outputs[li], d);
    axpy(1.0, delta, g.bias);
    if (li > 0) {
      outer_add(g.weights, delta, cache.outputs[li - 1]);
      RealVec d_in(layer.in_dim(), 0.0);
      gemv_t_add(layer.weights, delta, d_in);
      d = std::move(d_in);
    } else {
      if (cache.sparse) {
        outer_add(g.weights, delta, cache.sparse_input);
      } else {
        outer_add(g.weights, delta, cache.dense_input);
      }
      if (!want_input_grad) return {};
      RealVec d_in(layer.in_dim(), 0.0);
      gemv_t_add(layer.weights, delta, d_in);
      return d_in;
    }
  }
  return {};
}

void FeedForwardNet::collect_slots(std::vector<ParamSlot>& out, const std::string& prefix) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].collect_slots(out, prefix + "layer" + std::to_string(i) + ".");
  }
}

void FeedForwardNet::touch() {
  identity_.bump();
  for (auto& l : layers_) l.touch();
}

}  // namespace threadtrack::nn
