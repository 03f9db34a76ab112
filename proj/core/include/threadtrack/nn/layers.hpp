#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "threadtrack/nn/params.hpp"
#include "threadtrack/nn/tensor.hpp"

namespace threadtrack::nn {

enum class Activation { kTanh, kIdentity };

// Fully connected layer: y = act(W x + b).
struct DenseLayer {
  struct Cache {
    CacheStamp stamp;
    RealVec input;
    RealVec output;
  };

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation act);

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }

  RealVec forward(std::span<const double> x, Cache* cache = nullptr) const;
  // Accumulates into grads and returns dL/dx.
  RealVec backward(const Cache& cache, std::span<const double> d_out,
                   DenseLayer& grads) const;

  void collect_slots(std::vector<ParamSlot>& out, const std::string& prefix);
  void touch() { identity.bump(); }
  CacheStamp stamp() const { return identity.stamp(); }

  Matrix weights;
  RealVec bias;
  Activation activation = Activation::kIdentity;
  ParamIdentity identity;
};

// Stack of dense layers. Accepts dense or sparse input on the first layer.
class FeedForwardNet {
 public:
  struct Cache {
    CacheStamp stamp;
    bool sparse = false;
    RealVec dense_input;
    SparseVector sparse_input;
    std::vector<RealVec> outputs;  // post-activation output of each layer
  };

  FeedForwardNet() = default;
  explicit FeedForwardNet(std::vector<DenseLayer> layers);

  // `hidden_layers` tanh layers of width `hidden`, then an identity layer of
  // width `out`.
  static FeedForwardNet mlp(std::size_t in, std::size_t hidden,
                            std::size_t hidden_layers, std::size_t out);

  std::size_t in_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
  std::size_t out_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }
  std::size_t depth() const { return layers_.size(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  RealVec forward(std::span<const double> x, Cache* cache = nullptr) const;
  RealVec forward(const SparseVector& x, Cache* cache = nullptr) const;

  // Accumulates dL/dtheta into `grads`. Returns dL/dx when `want_input_grad`,
  // otherwise an empty vector.
  RealVec backward(const Cache& cache, std::span<const double> d_out,
                   FeedForwardNet& grads, bool want_input_grad = true) const;

  void collect_slots(std::vector<ParamSlot>& out, const std::string& prefix);
  void touch();
  CacheStamp stamp() const { return identity_.stamp(); }

 private:
  template <class Input>
  RealVec run(const Input& x, Cache* cache) const;

  std::vector<DenseLayer> layers_;
  ParamIdentity identity_;
};

inline std::pair<RealVec, FeedForwardNet::Cache> ff_forward(const FeedForwardNet& net,
                                                            std::span<const double> x) {
  FeedForwardNet::Cache cache;
  RealVec y = net.forward(x, &cache);
  return {std::move(y), std::move(cache)};
}

inline std::pair<FeedForwardNet, RealVec> ff_backward(const FeedForwardNet& net,
                                                      const FeedForwardNet::Cache& cache,
                                                      std::span<const double> d_out) {
  FeedForwardNet grads = zeros_like(net);
  RealVec d_in = net.backward(cache, d_out, grads, true);
  return {std::move(grads), std::move(d_in)};
}

}  // namespace threadtrack::nn
