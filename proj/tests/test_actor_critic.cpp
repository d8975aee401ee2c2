#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cpi2/actor_critic.hpp"
#include "oracles.hpp"

using namespace cpi2;

namespace {

// contiguous on-policy sequence through a given critic and actor
std::vector<Transition> make_sequence(int length, const GaussianPolicy& actor, Rng& rng,
                                      bool terminal_tail, double log_prob_shift = 0.0) {
  std::vector<Transition> seq;
  Vec obs{rng.uniform(-1, 1), rng.uniform(-1, 1)};
  for (int i = 0; i < length; ++i) {
    Transition t;
    t.obs = obs;
    t.action = {rng.uniform(-1, 1)};
    t.reward = rng.uniform(-1, 1);
    obs = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    t.next_obs = obs;
    t.terminated = terminal_tail && i + 1 == length;
    t.behavior_log_prob = actor.log_prob(t.obs, t.action) + log_prob_shift;
    seq.push_back(std::move(t));
  }
  return seq;
}

}  // namespace

TEST_CASE("n-step return examples") {
  CHECK(n_step_return(Vec{1.0}, 10.0, 0.99) == doctest::Approx(10.9).epsilon(1e-12));
  CHECK(n_step_return(Vec{3.0, 7.0}, 100.0, 0.0) == 3.0);
  CHECK(n_step_return(Vec{1.0, 1.0, 1.0}, 5.0, 0.9) == doctest::Approx(6.355).epsilon(1e-12));
  CHECK_THROWS_AS(n_step_return(Vec{}, 0.0, 0.9), std::invalid_argument);
}

TEST_CASE("monte carlo return examples") {
  CHECK(monte_carlo_return(Vec{1.0, 1.0, 1.0}, 1.0) == 3.0);
  CHECK(monte_carlo_return(Vec{2.0, 0.0, 0.0}, 0.5) == 2.0);
  CHECK(monte_carlo_return(Vec{1.0, 2.0}, 0.5) == 2.0);
}

TEST_CASE("n-step return with full length and zero bootstrap equals monte carlo") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    Vec rewards;
    const int len = 1 + static_cast<int>(rng.uniform_index(10));
    for (int i = 0; i < len; ++i) rewards.push_back(rng.uniform(-2, 2));
    const double gamma = rng.uniform(0.1, 0.999);
    CHECK(n_step_return(rewards, 0.0, gamma) ==
          doctest::Approx(monte_carlo_return(rewards, gamma)).epsilon(1e-12));
  }
}

TEST_CASE("single-transition v-trace example") {
  // on-policy, rho_bar=c_bar=1, n=1, V(s)=0, r=1, gamma=0.9, V(s')=2 -> 2.8
  Rng rng(2);
  GaussianPolicy actor = make_gaussian_policy(2, 1, {4}, 0.5, rng);

  Transition t;
  t.obs = {0.3, -0.2};
  t.action = {0.1};
  t.reward = 1.0;
  t.next_obs = {0.5, 0.4};
  t.terminated = false;
  t.behavior_log_prob = actor.log_prob(t.obs, t.action);

  // V(s) = 10 s[0] - 3 gives V(t.obs) = 0 and V(t.next_obs) = 2
  Critic linear{Mlp::init({2, 1}, rng), 1.0};
  auto p = linear.net.params();
  p[0] = 10.0;  // weight on s[0]
  p[1] = 0.0;
  p[2] = -3.0;  // bias
  CHECK(linear.value(t.obs) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(linear.value(t.next_obs) == doctest::Approx(2.0).epsilon(1e-12));

  const VtraceConfig cfg{1.0, 1.0, 0.9, 1};
  const Vec targets = vtrace_targets(std::vector<Transition>{t}, linear, actor, cfg);
  CHECK(targets.size() == 1);
  CHECK(targets[0] == doctest::Approx(2.8).epsilon(1e-12));

  // clipping saturates: density ratio 3 with rho_bar=1 gives the same target
  Transition off = t;
  off.behavior_log_prob = actor.log_prob(t.obs, t.action) - std::log(3.0);
  const Vec clipped = vtrace_targets(std::vector<Transition>{off}, linear, actor, cfg);
  CHECK(clipped[0] == targets[0]);
}

TEST_CASE("on-policy v-trace equals n-step TD targets") {
  Rng rng(3);
  GaussianPolicy actor = make_gaussian_policy(2, 1, {8}, 0.5, rng);
  const Critic critic{Mlp::init({2, 8, 1}, rng), 1.0};
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(5));
    const int len = 1 + static_cast<int>(rng.uniform_index(8));
    const bool terminal = rng.uniform() < 0.5;
    const auto seq = make_sequence(len, actor, rng, terminal);
    const VtraceConfig cfg{1.0, 1.0, 0.95, n};
    const Vec targets = vtrace_targets(seq, critic, actor, cfg);
    for (int s = 0; s < len; ++s) {
      const int end = std::min(len, s + n);
      std::vector<double> rewards;
      for (int t = s; t < end; ++t) rewards.push_back(seq[t].reward);
      const bool tail_terminal = terminal && end == len;
      const double bootstrap =
          tail_terminal ? 0.0 : critic.value(seq[end - 1].next_obs);
      const double expected = oracles::direct_n_step(rewards, bootstrap, 0.95);
      CHECK(std::abs(targets[s] - expected) < 1e-10);
    }
  }
}

TEST_CASE("raising the clip bounds does not change already-unclipped targets") {
  Rng rng(4);
  GaussianPolicy actor = make_gaussian_policy(2, 1, {8}, 0.5, rng);
  const Critic critic{Mlp::init({2, 8, 1}, rng), 1.0};
  // behavior density above the target density => all ratios < 1
  const auto seq = make_sequence(6, actor, rng, false, +0.4);
  const Vec low = vtrace_targets(seq, critic, actor, VtraceConfig{1.0, 1.0, 0.95, 3});
  const Vec high = vtrace_targets(seq, critic, actor, VtraceConfig{2.5, 1.7, 0.95, 3});
  CHECK(low == high);
}

TEST_CASE("v-trace requires behavior log-probs") {
  Rng rng(5);
  GaussianPolicy actor = make_gaussian_policy(2, 1, {4}, 0.5, rng);
  const Critic critic{Mlp::init({2, 4, 1}, rng), 1.0};
  auto seq = make_sequence(3, actor, rng, false);
  seq[1].behavior_log_prob = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(vtrace_targets(seq, critic, actor, VtraceConfig{}), std::invalid_argument);
}

TEST_CASE("critic already equal to its targets has zero loss") {
  Rng rng(6);
  GaussianPolicy actor = make_gaussian_policy(2, 1, {4}, 0.5, rng);
  Critic critic{Mlp::init({2, 8, 1}, rng), 1.0};
  // zero-reward self-consistent case: critic identically zero
  for (double& p : critic.net.params()) p = 0.0;
  auto seq = make_sequence(4, actor, rng, false);
  for (Transition& t : seq) t.reward = 0.0;
  const double loss =
      train_critic(critic, {seq}, actor, VtraceConfig{1.0, 1.0, 0.9, 3}, 1e-3);
  CHECK(loss == 0.0);
}

TEST_CASE("constant-zero-reward training drives the critic to zero") {
  Rng rng(7);
  GaussianPolicy actor = make_gaussian_policy(2, 1, {8}, 0.5, rng);
  Critic critic{Mlp::init({2, 16, 1}, rng, 1.0), 1.0};  // unscaled output layer
  std::vector<std::vector<Transition>> batch;
  for (int i = 0; i < 8; ++i) {
    auto seq = make_sequence(5, actor, rng, false);
    for (Transition& t : seq) t.reward = 0.0;
    batch.push_back(std::move(seq));
  }
  for (int step = 0; step < 500; ++step) {
    train_critic(critic, batch, actor, VtraceConfig{1.0, 1.0, 0.9, 3}, 1e-3);
  }
  double max_v = 0.0;
  for (const auto& seq : batch) {
    for (const Transition& t : seq) {
      max_v = std::max(max_v, std::abs(critic.value(t.obs)));
    }
  }
  CHECK(max_v < 0.02);
}

TEST_CASE("repeated training on one fixed batch halves the loss") {
  Rng rng(8);
  GaussianPolicy actor = make_gaussian_policy(2, 1, {8}, 0.5, rng);
  Critic critic{Mlp::init({2, 32, 1}, rng), 1.0};
  // terminal sequences with state-dependent rewards: the targets are fully
  // anchored, so the regression has a well-defined fixed point
  std::vector<std::vector<Transition>> batch;
  for (int i = 0; i < 4; ++i) {
    auto seq = make_sequence(5, actor, rng, true);
    for (Transition& t : seq) t.reward = 0.8 * t.obs[0] - 0.3 * t.obs[1];
    batch.push_back(std::move(seq));
  }
  const VtraceConfig cfg{1.0, 1.0, 0.9, 5};

  SUBCASE("fixed targets regress to half within 100 steps") {
    std::vector<Vec> inputs, targets;
    for (const auto& seq : batch) {
      const Vec v = vtrace_targets(seq, critic, actor, cfg);
      for (std::size_t i = 0; i < seq.size(); ++i) {
        inputs.push_back(seq[i].obs);
        targets.push_back({v[i]});
      }
    }
    const double initial = critic.net.train_step(inputs, targets, LossKind::mse, 3e-2);
    double final_loss = initial;
    for (int step = 0; step < 99; ++step) {
      final_loss = critic.net.train_step(inputs, targets, LossKind::mse, 3e-2);
    }
    CHECK(final_loss <= 0.5 * initial);
  }

  SUBCASE("full loop with per-call snapshots contracts more slowly") {
    const double initial = train_critic(critic, batch, actor, cfg, 3e-2);
    double final_loss = initial;
    for (int step = 0; step < 299; ++step) {
      final_loss = train_critic(critic, batch, actor, cfg, 3e-2);
    }
    CHECK(final_loss <= 0.5 * initial);
  }
}

TEST_CASE("imitation loss is stationary when experts equal the actor means") {
  Rng rng(9);
  GaussianPolicy actor = make_gaussian_policy(2, 1, {8}, 0.3, rng);
  std::vector<Vec> states{{0.2, -0.4}, {0.9, 0.1}};
  std::vector<Vec> experts;
  for (const Vec& s : states) experts.push_back(actor.mean(s));
  const Vec before(actor.mean_net.params().begin(), actor.mean_net.params().end());
  const double loss = train_actor_imitation(actor, states, experts, 1e-3);
  // NLL at the mean: log(sigma) + 0.5*log(2*pi) per dimension
  CHECK(loss == doctest::Approx(std::log(0.3) + 0.9189385332046727).epsilon(1e-12));
  double max_move = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    max_move = std::max(max_move, std::abs(actor.mean_net.params()[i] - before[i]));
  }
  CHECK(max_move < 1e-8);
}

TEST_CASE("actor mean converges to a repeatedly imitated expert action") {
  Rng rng(10);
  GaussianPolicy actor = make_gaussian_policy(2, 1, {16, 16}, 0.3, rng);
  const std::vector<Vec> states{{0.4, -0.1}};
  const std::vector<Vec> experts{{0.8}};
  for (int step = 0; step < 2000; ++step) {
    train_actor_imitation(actor, states, experts, 1e-3);
  }
  CHECK(std::abs(actor.mean(states[0])[0] - 0.8) < 0.03);  // sigma/10
}

TEST_CASE("imitation loss is invariant under batch permutation") {
  Rng rng(11);
  GaussianPolicy a1 = make_gaussian_policy(2, 1, {8}, 0.3, rng);
  GaussianPolicy a2 = a1;
  std::vector<Vec> states{{0.1, 0.2}, {-0.5, 0.4}, {0.9, -0.9}};
  std::vector<Vec> experts{{0.3}, {-0.2}, {0.7}};
  const double l1 = train_actor_imitation(a1, states, experts, 1e-3);
  std::reverse(states.begin(), states.end());
  std::reverse(experts.begin(), experts.end());
  const double l2 = train_actor_imitation(a2, states, experts, 1e-3);
  CHECK(l1 == doctest::Approx(l2).epsilon(1e-12));
}

TEST_CASE("polyak averaging endpoints") {
  Rng rng(12);
  Mlp online = Mlp::init({2, 4, 1}, rng);
  Mlp target = Mlp::init({2, 4, 1}, rng);

  Mlp frozen = target;
  polyak_update(frozen, online, 0.0);
  CHECK(std::equal(frozen.params().begin(), frozen.params().end(), target.params().begin()));

  Mlp copied = target;
  polyak_update(copied, online, 1.0);
  CHECK(std::equal(copied.params().begin(), copied.params().end(), online.params().begin()));
}

TEST_CASE("ddpg on zero rewards drives Q toward zero") {
  Rng rng(13);
  GaussianPolicy actor = make_gaussian_policy(2, 1, {8}, 0.3, rng);
  Critic q{Mlp::init({3, 16, 1}, rng, 1.0), 1.0};  // deliberately non-small start
  GaussianPolicy actor_target = actor;
  Critic q_target = q;
  std::vector<Transition> batch;
  Rng data(14);
  for (int i = 0; i < 32; ++i) {
    Transition t;
    t.obs = {data.uniform(-1, 1), data.uniform(-1, 1)};
    t.action = {data.uniform(-1, 1)};
    t.reward = 0.0;
    t.next_obs = {data.uniform(-1, 1), data.uniform(-1, 1)};
    t.terminated = false;
    t.behavior_log_prob = 0.0;
    batch.push_back(std::move(t));
  }
  double initial_q = 0.0;
  for (const Transition& t : batch) {
    Vec in = t.obs;
    in.insert(in.end(), t.action.begin(), t.action.end());
    initial_q += std::abs(q.value(in));
  }
  for (int step = 0; step < 2000; ++step) {
    ddpg_update(actor, q, actor_target, q_target, batch, 0.9, 1e-3, 1e-2, 0.01);
  }
  double final_q = 0.0;
  for (const Transition& t : batch) {
    Vec in = t.obs;
    in.insert(in.end(), t.action.begin(), t.action.end());
    final_q += std::abs(q.value(in));
  }
  CHECK(final_q < 0.2 * initial_q);
}
