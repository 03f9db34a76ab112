#pragma once

#include <cstddef>
#include <vector>

#include "threadtrack/error.hpp"

namespace threadtrack::agent {

// Fixed-capacity ring; once full, every push evicts the oldest element.
template <class T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
    items_.reserve(capacity);
  }

  void push(T item) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[head_] = std::move(item);
      head_ = (head_ + 1) % capacity_;
    }
    ++pushed_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  std::size_t total_pushed() const { return pushed_; }

  // i = 0 is the oldest retained element.
  const T& at(std::size_t i) const {
    if (i >= items_.size()) throw DimensionError("replay buffer index out of range");
    return items_[(head_ + i) % items_.size()];
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::size_t pushed_ = 0;
  std::vector<T> items_;
};

}  // namespace threadtrack::agent
