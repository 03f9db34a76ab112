#pragma once

#include <memory>
#include <span>
#include <vector>

#include "threadtrack/env/tree.hpp"
#include "threadtrack/qnet/drrn.hpp"

namespace threadtrack::agent {

// A tree with every node's bag of words precomputed.
struct EncodedTree {
  const env::DiscussionTree* tree = nullptr;
  std::vector<text::BowVector> bows;  // by node index
};

std::vector<EncodedTree> encode_trees(std::span<const env::DiscussionTree> trees,
                                      const text::TextEncoder& encoder);

using Action = std::vector<int>;  // node indices, ascending (= timestamp order)

// Q-function behind a uniform interface: scoring many actions for one state,
// and accumulating squared-TD-error gradients for a batch.
class ValueModel {
 public:
  virtual ~ValueModel() = default;

  virtual std::vector<double> values(const qnet::StateFeatures& s, const EncodedTree& tree,
                                     std::span<const Action> actions) = 0;
  // Adds weight * d/dtheta (y - Q(s, a))^2 to the pending gradient and
  // returns (y - Q(s, a))^2.
  virtual double add_sample(const qnet::StateFeatures& s, const EncodedTree& tree,
                            const Action& action, double y, double weight) = 0;
  // params -= eta * pending gradient; clears it.
  virtual void apply(double eta) = 0;
  virtual void discard() = 0;
};

// Q1 = sum of Q0 over sub-actions (Q0 itself when K = 1).
class SumModel final : public ValueModel {
 public:
  SumModel(qnet::DrrnParams params, const knowledge::KnowledgeStore* store);

  std::vector<double> values(const qnet::StateFeatures& s, const EncodedTree& tree,
                             std::span<const Action> actions) override;
  // Q0 of each candidate comment with h_s computed once.
  std::vector<double> sub_action_values(const qnet::StateFeatures& s, const EncodedTree& tree,
                                        std::span<const int> nodes);
  double add_sample(const qnet::StateFeatures& s, const EncodedTree& tree, const Action& action,
                    double y, double weight) override;
  void apply(double eta) override;
  void discard() override;

  const qnet::DrrnParams& params() const { return params_; }
  qnet::DrrnParams& params() { return params_; }
  const qnet::DrrnParams& gradient() const { return grads_; }
  // Pushes parked document gradients into gradient(); apply() does this too.
  void flush();

 private:
  qnet::DrrnParams params_;
  qnet::DrrnParams grads_;
  qnet::KnowledgeRuntime rt_;
};

class BiLstmModel final : public ValueModel {
 public:
  BiLstmModel(qnet::DrrnBiLstmParams params, const knowledge::KnowledgeStore* store);

  std::vector<double> values(const qnet::StateFeatures& s, const EncodedTree& tree,
                             std::span<const Action> actions) override;
  double add_sample(const qnet::StateFeatures& s, const EncodedTree& tree, const Action& action,
                    double y, double weight) override;
  void apply(double eta) override;
  void discard() override;

  const qnet::DrrnBiLstmParams& params() const { return params_; }
  qnet::DrrnBiLstmParams& params() { return params_; }
  const qnet::DrrnBiLstmParams& gradient() const { return grads_; }
  void flush();

 private:
  qnet::DrrnBiLstmParams params_;
  qnet::DrrnBiLstmParams grads_;
  qnet::KnowledgeRuntime rt_;
};

}  // namespace threadtrack::agent
