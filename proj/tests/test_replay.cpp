#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cpi2/replay.hpp"

using namespace cpi2;

namespace {

Transition step_transition(double tag, bool terminated = false) {
  Transition t;
  t.obs = {tag, 0.0};
  t.action = {0.0};
  t.reward = 1.0;
  t.next_obs = {tag + 1.0, 0.0};
  t.terminated = terminated;
  t.behavior_log_prob = -0.5;
  return t;
}

}  // namespace

TEST_CASE("a single full-length episode is the only full window") {
  ReplayBuffer buffer(64);
  for (int i = 0; i < 10; ++i) buffer.push(step_transition(i, i == 9), i == 0);
  Rng rng(1);
  int full = 0;
  const auto windows = buffer.sample_sequences(200, 10, rng);
  for (const auto& w : windows) {
    if (w.size() == 10) {
      ++full;
      CHECK(w.front().obs[0] == 0.0);  // only the episode start yields 10 steps
    }
  }
  CHECK(full > 0);
}

TEST_CASE("n=1 reduces to uniform transition sampling") {
  ReplayBuffer buffer(64);
  for (int i = 0; i < 20; ++i) buffer.push(step_transition(i), i % 5 == 0);
  Rng rng(2);
  const auto windows = buffer.sample_sequences(500, 1, rng);
  for (const auto& w : windows) CHECK(w.size() == 1);
}

TEST_CASE("windows never cross episode boundaries") {
  ReplayBuffer buffer(64);
  // two episodes: tags 0..6 then 100..104
  for (int i = 0; i < 7; ++i) buffer.push(step_transition(i, i == 6), i == 0);
  for (int i = 0; i < 5; ++i) buffer.push(step_transition(100 + i, i == 4), i == 0);
  Rng rng(3);
  const auto windows = buffer.sample_sequences(10000, 4, rng);
  for (const auto& w : windows) {
    const bool first_episode = w.front().obs[0] < 50.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK((w[i].obs[0] < 50.0) == first_episode);
      if (i > 0) CHECK(w[i].obs[0] == w[i - 1].obs[0] + 1.0);  // contiguous
    }
  }
}

TEST_CASE("sampling an empty buffer is an error") {
  ReplayBuffer buffer(8);
  Rng rng(4);
  CHECK_THROWS_AS(buffer.sample_sequences(1, 1, rng), std::runtime_error);
}

TEST_CASE("capacity is enforced by evicting the oldest transitions") {
  ReplayBuffer buffer(5);
  for (int i = 0; i < 12; ++i) buffer.push(step_transition(i), i % 4 == 0);
  CHECK(buffer.size() == 5);
  CHECK(buffer[0].obs[0] == 7.0);
  CHECK(buffer[4].obs[0] == 11.0);
}

TEST_CASE("non-finite transitions are rejected") {
  ReplayBuffer buffer(8);
  Transition bad = step_transition(0);
  bad.reward = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(buffer.push(bad, true), std::invalid_argument);
  Transition bad_obs = step_transition(0);
  bad_obs.obs[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(buffer.push(bad_obs, true), std::invalid_argument);
  CHECK(buffer.empty());
}

TEST_CASE("partially evicted episodes still yield contiguous windows") {
  ReplayBuffer buffer(6);
  for (int i = 0; i < 10; ++i) buffer.push(step_transition(i, i == 9), i == 0);
  // first 4 transitions of the episode were evicted
  CHECK(buffer.size() == 6);
  Rng rng(5);
  const auto windows = buffer.sample_sequences(100, 3, rng);
  for (const auto& w : windows) {
    for (std::size_t i = 1; i < w.size(); ++i) {
      CHECK(w[i].obs[0] == w[i - 1].obs[0] + 1.0);
    }
  }
}
