#pragma once

#include <span>

#include "cpi2/actor_critic.hpp"
#include "cpi2/dynamics.hpp"
#include "cpi2/env.hpp"
#include "cpi2/policy.hpp"
#include "cpi2/rng.hpp"

namespace cpi2 {

enum class ReturnMode { critic_bootstrap, monte_carlo };

/// Planning hyperparameters. sigma_plan is in raw action units.
struct PlannerConfig {
  int K = 50;             // rollouts per optimization iteration
  int M = 10;             // optimization iterations
  int H = 1;              // imagination horizon
  double lambda = 0.3;    // path-integral temperature
  double sigma_plan = 0.3;
  ReturnMode return_mode = ReturnMode::critic_bootstrap;
  bool greedy = true;
  bool inner_actor_update = true;
  double gamma = 0.99;
  double actor_lr = 3e-4;  // for the per-iteration imitation step
  int rollout_threads = 1;
  bool record_samples = false;  // keep every sampled (action, return) in the result
};

struct PlanResult {
  Vec expert_action;
  double estimated_return = 0.0;
  int iterations_used = 0;
  Vec per_iteration_best;
  bool diverged = false;  // every rollout went non-finite
  // filled only when record_samples is set
  std::vector<Vec> sampled_actions;
  Vec sampled_returns;
};

enum class BaselineMode { vanilla_pi2, mpc_random_shooting };

/// Affine rescaling of path costs to [0, 1]; a degenerate range maps to all
/// zeros (uniform weights downstream).
Vec normalize_costs(std::span<const double> costs);

/// Softmax of -S/lambda, computed with max-subtraction.
Vec pi2_weights(std::span<const double> normalized_costs, double lambda);

/// Probability-weighted average of the sampled actions.
Vec pi2_update(const std::vector<Vec>& actions, std::span<const double> weights);

/// critic_bootstrap: n-step return over the rollout's rewards bootstrapped
/// with the critic's value of the last observation (zero after an imagined
/// termination). monte_carlo: discounted reward sum only.
double evaluate_rollout_return(const Rollout& rollout, const Critic* critic, ReturnMode mode,
                               double gamma);

/// Path-integral planning with critic-assisted scoring and best-action
/// memory. Each iteration samples K first actions around the running mean,
/// imagines K rollouts, converts returns to normalized costs and moves the
/// mean to the weighted action average. With greedy on, the best-scoring
/// sampled action across all iterations is returned; otherwise the final
/// mean (scored with one extra rollout). When inner_actor_update is set the
/// actor takes one imitation step toward the running expert each iteration.
PlanResult critic_pi2_plan(std::span<const double> obs, GaussianPolicy& actor,
                           const Critic* critic, const Predictor& dynamics, const EnvSpec& env,
                           const PlannerConfig& cfg, Rng& rng);

/// vanilla_pi2: the same loop with Monte Carlo scoring, no critic, no greedy
/// memory and no inner actor updates. mpc_random_shooting: samples uniform
/// action sequences of length H (K per iteration, M iterations' worth of
/// budget) and returns the first action of the best sequence.
PlanResult baseline_plan(std::span<const double> obs, const GaussianPolicy& actor,
                         const Predictor& dynamics, const EnvSpec& env,
                         const PlannerConfig& cfg, BaselineMode mode, Rng& rng);

}  // namespace cpi2
