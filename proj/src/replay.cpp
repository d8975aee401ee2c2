#include "cpi2/replay.hpp"

#include <cmath>
#include <stdexcept>

namespace cpi2 {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t, bool episode_start) {
  if (!all_finite(t.obs) || !all_finite(t.action) || !all_finite(t.next_obs) ||
      !std::isfinite(t.reward) || !std::isfinite(t.behavior_log_prob)) {
    throw std::invalid_argument("ReplayBuffer::push: non-finite transition");
  }
  if (episode_start) ++next_episode_id_;
  data_.push_back(std::move(t));
  episode_.push_back(next_episode_id_);
  while (data_.size() > capacity_) {
    data_.pop_front();
    episode_.pop_front();
  }
}

std::vector<std::vector<Transition>> ReplayBuffer::sample_sequences(std::size_t count, int n,
                                                                    Rng& rng) const {
  if (data_.empty()) throw std::runtime_error("ReplayBuffer::sample_sequences: buffer empty");
  if (n < 1) throw std::invalid_argument("ReplayBuffer::sample_sequences: n must be >= 1");
  std::vector<std::vector<Transition>> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t start = rng.uniform_index(data_.size());
    std::vector<Transition> window;
    window.reserve(n);
    for (std::size_t i = start; i < data_.size() && window.size() < static_cast<std::size_t>(n);
         ++i) {
      if (episode_[i] != episode_[start]) break;
      window.push_back(data_[i]);
    }
    out.push_back(std::move(window));
  }
  return out;
}

}  // namespace cpi2
