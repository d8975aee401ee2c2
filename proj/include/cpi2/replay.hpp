#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "cpi2/rng.hpp"
#include "cpi2/util.hpp"

namespace cpi2 {

/// One real environment interaction. behavior_log_prob is the acting
/// policy's log density of the executed action, recorded at collection time.
struct Transition {
  Vec obs;
  Vec action;
  double reward = 0.0;
  Vec next_obs;
  bool terminated = false;
  double behavior_log_prob = 0.0;
};

/// Ring storage of transitions with episode boundaries preserved, so
/// contiguous within-episode windows can be sampled for n-step targets.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  /// Appends a transition; episode_start begins a new episode segment.
  /// Rejects non-finite values.
  void push(Transition t, bool episode_start);

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  const Transition& operator[](std::size_t i) const { return data_[i]; }

  /// `count` contiguous within-episode windows of up to `n` transitions.
  /// Start positions are uniform over the buffer; a window is cut short only
  /// by its episode's end, never crossing into the next episode.
  std::vector<std::vector<Transition>> sample_sequences(std::size_t count, int n,
                                                        Rng& rng) const;

 private:
  std::deque<Transition> data_;
  std::deque<std::uint64_t> episode_;
  std::uint64_t next_episode_id_ = 0;
  std::size_t capacity_;
};

}  // namespace cpi2
