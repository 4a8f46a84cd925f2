#include "sqt/replay.hpp"

#include <string>

#include "sqt/error.hpp"

namespace sqt {

ReplayBuffer::ReplayBuffer(int capacity, int state_dim, int action_dim)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
  if (capacity < 1) throw ConfigError("ReplayBuffer: capacity must be >= 1");
  if (state_dim < 1 || action_dim < 1)
    throw ConfigError("ReplayBuffer: dims must be >= 1");
  storage_.resize(capacity_);
}

void ReplayBuffer::push(const Transition& t) {
  if (t.state.size() != state_dim_ || t.next_state.size() != state_dim_)
    throw ShapeError("ReplayBuffer::push: state dim " +
                     std::to_string(t.state.size()) + " != " +
                     std::to_string(state_dim_));
  if (t.action.size() != action_dim_)
    throw ShapeError("ReplayBuffer::push: action dim " +
                     std::to_string(t.action.size()) + " != " +
                     std::to_string(action_dim_));
  storage_[write_cursor_] = t;
  write_cursor_ = (write_cursor_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

std::vector<Transition> ReplayBuffer::sample(Rng& rng, int batch_size) const {
  if (size_ == 0) throw ConfigError("ReplayBuffer::sample: buffer is empty");
  if (batch_size < 1)
    throw ConfigError("ReplayBuffer::sample: batch_size must be >= 1");
  std::vector<Transition> batch;
  batch.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i)
    batch.push_back(storage_[rng.uniform_int(size_)]);
  return batch;
}

std::vector<Transition> ReplayBuffer::snapshot() const {
  std::vector<Transition> out;
  out.reserve(size_);
  const int start = (size_ < capacity_) ? 0 : write_cursor_;
  for (int i = 0; i < size_; ++i)
    out.push_back(storage_[(start + i) % capacity_]);
  return out;
}

}  // namespace sqt
