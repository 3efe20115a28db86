#pragma once

#include <cstddef>
#include <vector>

#include "seforge/rng.hpp"
#include "seforge/transition.hpp"

namespace seforge {

/// Fixed-capacity FIFO of transitions with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  void clear();

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }

  /// i = 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const;

  /// Throws StateError when the buffer is empty.
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t head_ = 0;  // next slot to overwrite once full
};

}  // namespace seforge
