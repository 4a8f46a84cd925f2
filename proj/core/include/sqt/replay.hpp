#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sqt/rng.hpp"

namespace sqt {

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool done = false;
};

// Fixed-capacity FIFO cache of transitions with uniform minibatch sampling
// (with replacement). Once full, each insert evicts the oldest entry.
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, int state_dim, int action_dim);

  void push(const Transition& t);

  // batch_size independent uniform draws with replacement.
  std::vector<Transition> sample(Rng& rng, int batch_size) const;

  int size() const { return size_; }
  int capacity() const { return capacity_; }

  // Stored transitions in insertion order, oldest first.
  std::vector<Transition> snapshot() const;

 private:
  int capacity_;
  int state_dim_;
  int action_dim_;
  std::vector<Transition> storage_;
  int write_cursor_ = 0;
  int size_ = 0;
};

}  // namespace sqt
