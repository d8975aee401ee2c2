#pragma once

#include <span>

#include "cpi2/mlp.hpp"
#include "cpi2/policy.hpp"
#include "cpi2/replay.hpp"

namespace cpi2 {

/// State-value function. The network regresses values divided by
/// output_scale, keeping its targets O(1) regardless of the discount
/// horizon; value() reports the rescaled estimate. Trainers set the scale to
/// 1/(1-gamma) so tanh layers never have to chase O(100) targets.
struct Critic {
  Mlp net;
  double output_scale = 1.0;

  double value(std::span<const double> obs) const {
    return net.forward(obs)[0] * output_scale;
  }
};

/// Clipping bounds and horizon for off-policy value targets.
struct VtraceConfig {
  double rho_bar = 1.0;
  double c_bar = 1.0;
  double gamma = 0.99;
  int n = 5;
};

/// Truncated discounted reward sum bootstrapped after the last reward:
/// sum_k gamma^k r_k + gamma^len * bootstrap_value. Callers pass a zero
/// bootstrap for sequences that ended in termination.
double n_step_return(std::span<const double> rewards, double bootstrap_value, double gamma);

/// Full discounted reward sum with no bootstrap.
double monte_carlo_return(std::span<const double> rewards, double gamma);

/// Off-policy value targets for every position of one contiguous
/// within-episode sequence. Importance ratios compare the target policy's
/// density of the stored action against the stored behavior log density, and
/// are clipped at rho_bar (temporal-difference terms) and c_bar (trace
/// coefficients). A terminal final transition bootstraps with zero.
Vec vtrace_targets(std::span<const Transition> sequence, const Critic& critic,
                   const GaussianPolicy& target_actor, const VtraceConfig& cfg);

/// One mse step of the critic toward targets computed from a frozen copy of
/// itself. Returns the loss.
double train_critic(Critic& critic, const std::vector<std::vector<Transition>>& batch,
                    const GaussianPolicy& actor, const VtraceConfig& cfg, double lr);

/// One Gaussian negative-log-likelihood step of the actor's mean network
/// toward the expert actions. Returns the loss.
double train_actor_imitation(GaussianPolicy& actor, const std::vector<Vec>& states,
                             const std::vector<Vec>& expert_actions, double lr);

/// theta_target <- (1 - tau) * theta_target + tau * theta
void polyak_update(Mlp& target, const Mlp& online, double tau);

struct DdpgLosses {
  double q_loss = 0.0;
  double mean_q = 0.0;
};

/// One standard deterministic-policy-gradient update: the Q network regresses
/// toward r + gamma * Q_target(s', actor_target(s')), the actor ascends
/// Q(s, actor(s)), and both target networks are Polyak-averaged. The Q
/// networks use the same output scaling as the state-value critic.
DdpgLosses ddpg_update(GaussianPolicy& actor, Critic& q_net, GaussianPolicy& actor_target,
                       Critic& q_target, std::span<const Transition> batch, double gamma,
                       double actor_lr, double critic_lr, double tau);

}  // namespace cpi2
