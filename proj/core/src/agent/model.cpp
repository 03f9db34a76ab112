#include "threadtrack/agent/model.hpp"

#include <algorithm>
#include <unordered_map>

#include "threadtrack/error.hpp"

namespace threadtrack::agent {
namespace {

std::vector<const nn::SparseVector*> bows_of(const EncodedTree& tree, const Action& action) {
  std::vector<const nn::SparseVector*> out;
  out.reserve(action.size());
  for (int node : action) out.push_back(&tree.bows.at(static_cast<std::size_t>(node)).counts());
  return out;
}

}  // namespace

std::vector<EncodedTree> encode_trees(std::span<const env::DiscussionTree> trees,
                                      const text::TextEncoder& encoder) {
  std::vector<EncodedTree> out;
  out.reserve(trees.size());
  for (const auto& t : trees) {
    EncodedTree e;
    e.tree = &t;
    e.bows.reserve(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) e.bows.push_back(encoder.bow(t.node(static_cast<int>(i)).text));
    out.push_back(std::move(e));
  }
  return out;
}

SumModel::SumModel(qnet::DrrnParams params, const knowledge::KnowledgeStore* store)
    : params_(std::move(params)), grads_(nn::zeros_like(params_)), rt_{store, {}} {}

std::vector<double> SumModel::sub_action_values(const qnet::StateFeatures& s,
                                                const EncodedTree& tree, std::span<const int> nodes) {
  const nn::RealVec h_s = qnet::encode_state(params_.state, s, &rt_, nullptr);
  std::vector<double> q;
  q.reserve(nodes.size());
  for (int node : nodes) {
    q.push_back(nn::dot(h_s, params_.action_net.forward(tree.bows.at(static_cast<std::size_t>(node)).counts())));
  }
  return q;
}

std::vector<double> SumModel::values(const qnet::StateFeatures& s, const EncodedTree& tree,
                                     std::span<const Action> actions) {
  const nn::RealVec h_s = qnet::encode_state(params_.state, s, &rt_, nullptr);
  std::unordered_map<int, double> q0;
  auto sub = [&](int node) {
    auto it = q0.find(node);
    if (it != q0.end()) return it->second;
    const double v =
        nn::dot(h_s, params_.action_net.forward(tree.bows.at(static_cast<std::size_t>(node)).counts()));
    q0.emplace(node, v);
    return v;
  };
  std::vector<double> out;
  out.reserve(actions.size());
  for (const auto& a : actions) {
    if (a.empty()) throw DimensionError("sum model: empty action");
    double v = sub(a[0]);
    for (std::size_t i = 1; i < a.size(); ++i) v += sub(a[i]);
    out.push_back(v);
  }
  return out;
}

double SumModel::add_sample(const qnet::StateFeatures& s, const EncodedTree& tree,
                            const Action& action, double y, double weight) {
  qnet::SumCache cache;
  const auto bows = bows_of(tree, action);
  const double q = qnet::q1_sum(params_, s, bows, &rt_, &cache);
  const double err = y - q;
  qnet::backprop_q(params_, cache, -2.0 * weight * err, grads_, &rt_);
  return err * err;
}

void SumModel::flush() { qnet::flush_knowledge(params_.state, &rt_, grads_.state); }

void SumModel::apply(double eta) {
  flush();
  nn::sgd_step(params_, grads_, eta);
  nn::set_zero(grads_);
}

void SumModel::discard() {
  flush();
  nn::set_zero(grads_);
}

BiLstmModel::BiLstmModel(qnet::DrrnBiLstmParams params, const knowledge::KnowledgeStore* store)
    : params_(std::move(params)), grads_(nn::zeros_like(params_)), rt_{store, {}} {}

std::vector<double> BiLstmModel::values(const qnet::StateFeatures& s, const EncodedTree& tree,
                                        std::span<const Action> actions) {
  const nn::RealVec h_s = qnet::encode_state(params_.state, s, &rt_, nullptr);
  // Distinct comments in node order, actions rewritten as positions.
  std::vector<int> nodes;
  for (const auto& a : actions) nodes.insert(nodes.end(), a.begin(), a.end());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::vector<std::vector<int>> local(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    for (int node : actions[i]) {
      local[i].push_back(static_cast<int>(std::lower_bound(nodes.begin(), nodes.end(), node) -
                                          nodes.begin()));
    }
  }
  return qnet::q2_values(params_, h_s, bows_of(tree, nodes), local);
}

double BiLstmModel::add_sample(const qnet::StateFeatures& s, const EncodedTree& tree,
                               const Action& action, double y, double weight) {
  qnet::BiLstmCache cache;
  const auto bows = bows_of(tree, action);
  const double q = qnet::q2_bilstm(params_, s, bows, &rt_, &cache);
  const double err = y - q;
  qnet::backprop_q(params_, cache, -2.0 * weight * err, grads_, &rt_);
  return err * err;
}

void BiLstmModel::flush() { qnet::flush_knowledge(params_.state, &rt_, grads_.state); }

void BiLstmModel::apply(double eta) {
  flush();
  nn::sgd_step(params_, grads_, eta);
  nn::set_zero(grads_);
}

void BiLstmModel::discard() {
  flush();
  nn::set_zero(grads_);
}

}  // namespace threadtrack::agent
