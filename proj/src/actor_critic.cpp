#include "cpi2/actor_critic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cpi2 {

double n_step_return(std::span<const double> rewards, double bootstrap_value, double gamma) {
  if (rewards.empty()) throw std::invalid_argument("n_step_return: empty rewards");
  double acc = 0.0;
  double disc = 1.0;
  for (double r : rewards) {
    acc += disc * r;
    disc *= gamma;
  }
  return acc + disc * bootstrap_value;
}

double monte_carlo_return(std::span<const double> rewards, double gamma) {
  double acc = 0.0;
  double disc = 1.0;
  for (double r : rewards) {
    acc += disc * r;
    disc *= gamma;
  }
  return acc;
}

Vec vtrace_targets(std::span<const Transition> sequence, const Critic& critic,
                   const GaussianPolicy& target_actor, const VtraceConfig& cfg) {
  const std::size_t len = sequence.size();
  if (len == 0) throw std::invalid_argument("vtrace_targets: empty sequence");

  Vec values(len);
  Vec next_values(len);
  Vec deltas(len);
  Vec cs(len);
  for (std::size_t i = 0; i < len; ++i) {
    const Transition& t = sequence[i];
    if (!std::isfinite(t.behavior_log_prob)) {
      throw std::invalid_argument("vtrace_targets: missing behavior log-prob");
    }
    values[i] = critic.value(t.obs);
    next_values[i] = t.terminated ? 0.0 : critic.value(t.next_obs);
    const double ratio = std::exp(target_actor.log_prob(t.obs, t.action) - t.behavior_log_prob);
    const double rho = std::min(cfg.rho_bar, ratio);
    cs[i] = std::min(cfg.c_bar, ratio);
    deltas[i] = rho * (t.reward + cfg.gamma * next_values[i] - values[i]);
  }

  Vec targets(len);
  for (std::size_t s = 0; s < len; ++s) {
    const std::size_t end = std::min(len, s + static_cast<std::size_t>(cfg.n));
    double acc = 0.0;
    double coeff = 1.0;  // gamma^(t-s) * prod of c over [s, t)
    for (std::size_t t = s; t < end; ++t) {
      acc += coeff * deltas[t];
      coeff *= cfg.gamma * cs[t];
    }
    targets[s] = values[s] + acc;
  }
  return targets;
}

double train_critic(Critic& critic, const std::vector<std::vector<Transition>>& batch,
                    const GaussianPolicy& actor, const VtraceConfig& cfg, double lr) {
  if (batch.empty()) throw std::invalid_argument("train_critic: empty batch");
  const Critic frozen = critic;
  std::vector<Vec> inputs;
  std::vector<Vec> targets;
  for (const auto& seq : batch) {
    const Vec v = vtrace_targets(seq, frozen, actor, cfg);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      inputs.push_back(seq[i].obs);
      targets.push_back({v[i] / critic.output_scale});
    }
  }
  return critic.net.train_step(inputs, targets, LossKind::mse, lr);
}

double train_actor_imitation(GaussianPolicy& actor, const std::vector<Vec>& states,
                             const std::vector<Vec>& expert_actions, double lr) {
  if (states.size() != expert_actions.size()) {
    throw std::invalid_argument("train_actor_imitation: state/action count mismatch");
  }
  return actor.mean_net.train_step(states, expert_actions, LossKind::gaussian_nll, lr,
                                   actor.sigma);
}

void polyak_update(Mlp& target, const Mlp& online, double tau) {
  auto t = target.params();
  auto o = online.params();
  if (t.size() != o.size()) throw std::invalid_argument("polyak_update: shape mismatch");
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = (1.0 - tau) * t[i] + tau * o[i];
  }
}

DdpgLosses ddpg_update(GaussianPolicy& actor, Critic& q_net, GaussianPolicy& actor_target,
                       Critic& q_target, std::span<const Transition> batch, double gamma,
                       double actor_lr, double critic_lr, double tau) {
  if (batch.empty()) throw std::invalid_argument("ddpg_update: empty batch");
  const std::size_t b = batch.size();
  const int act_dim = actor.mean_net.output_dim();

  // critic regression toward the target-network backup
  std::vector<Vec> q_inputs;
  std::vector<Vec> q_targets;
  q_inputs.reserve(b);
  q_targets.reserve(b);
  for (const Transition& t : batch) {
    Vec in = t.obs;
    in.insert(in.end(), t.action.begin(), t.action.end());
    q_inputs.push_back(std::move(in));
    double y = t.reward;
    if (!t.terminated) {
      Vec next_in = t.next_obs;
      const Vec a = actor_target.mean(t.next_obs);
      next_in.insert(next_in.end(), a.begin(), a.end());
      y += gamma * q_target.value(next_in);
    }
    q_targets.push_back({y / q_net.output_scale});
  }
  DdpgLosses losses;
  losses.q_loss = q_net.net.train_step(q_inputs, q_targets, LossKind::mse, critic_lr);

  // actor ascent on Q(s, actor(s)): chain dQ/da through the actor network
  Vec actor_grad(actor.mean_net.param_count(), 0.0);
  Vec q_scratch(q_net.net.param_count(), 0.0);
  Mlp::Trace actor_trace, q_trace;
  const double inv_b = 1.0 / static_cast<double>(b);
  double q_sum = 0.0;
  for (const Transition& t : batch) {
    const Vec a = actor.mean_net.forward(t.obs, actor_trace);
    Vec in = t.obs;
    in.insert(in.end(), a.begin(), a.end());
    q_sum += q_net.net.forward(in, q_trace)[0] * q_net.output_scale;
    std::fill(q_scratch.begin(), q_scratch.end(), 0.0);
    const Vec din = q_net.net.backward(q_trace, Vec{-inv_b}, q_scratch);
    const std::span<const double> da(din.data() + t.obs.size(), act_dim);
    actor.mean_net.backward(actor_trace, da, actor_grad);
  }
  actor.mean_net.adam_step(actor_grad, actor_lr);
  losses.mean_q = q_sum * inv_b;

  polyak_update(q_target.net, q_net.net, tau);
  polyak_update(actor_target.mean_net, actor.mean_net, tau);
  return losses;
}

}  // namespace cpi2
