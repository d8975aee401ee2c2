#include "cpi2/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cpi2/parallel.hpp"

namespace cpi2 {

Vec normalize_costs(std::span<const double> costs) {
  if (costs.empty()) throw std::invalid_argument("normalize_costs: empty input");
  if (!all_finite(costs)) throw std::invalid_argument("normalize_costs: non-finite cost");
  const auto [lo_it, hi_it] = std::minmax_element(costs.begin(), costs.end());
  const double lo = *lo_it, hi = *hi_it;
  Vec out(costs.size(), 0.0);
  if (hi > lo) {
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < costs.size(); ++i) out[i] = (costs[i] - lo) * inv;
  }
  return out;
}

Vec pi2_weights(std::span<const double> normalized_costs, double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("pi2_weights: lambda must be positive");
  const double lo = *std::min_element(normalized_costs.begin(), normalized_costs.end());
  Vec w(normalized_costs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(-(normalized_costs[i] - lo) / lambda);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

Vec pi2_update(const std::vector<Vec>& actions, std::span<const double> weights) {
  if (actions.size() != weights.size()) {
    throw std::invalid_argument("pi2_update: action/weight count mismatch");
  }
  double total = 0.0;
  for (double w : weights) total += w;
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("pi2_update: weights must sum to 1");
  }
  Vec mean(actions.front().size(), 0.0);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += weights[i] * actions[i][d];
  }
  return mean;
}

double evaluate_rollout_return(const Rollout& rollout, const Critic* critic, ReturnMode mode,
                               double gamma) {
  if (mode == ReturnMode::monte_carlo || critic == nullptr) {
    return monte_carlo_return(rollout.rewards, gamma);
  }
  const double bootstrap =
      rollout.terminated ? 0.0 : critic->value(rollout.observations.back());
  return n_step_return(rollout.rewards, bootstrap, gamma);
}

namespace {

struct ScoredAction {
  Vec action;
  double ret = 0.0;
  bool diverged = false;
};

}  // namespace

PlanResult critic_pi2_plan(std::span<const double> obs, GaussianPolicy& actor,
                           const Critic* critic, const Predictor& dynamics, const EnvSpec& env,
                           const PlannerConfig& cfg, Rng& rng) {
  if (cfg.K < 1 || cfg.M < 1 || cfg.H < 1) {
    throw std::invalid_argument("critic_pi2_plan: K, M and H must be positive");
  }
  const std::uint64_t base = rng.next_u64();
  const Vec initial_mean = clip(actor.mean(obs), env.action_low, env.action_high);
  Vec mean = initial_mean;

  PlanResult result;
  result.iterations_used = cfg.M;
  double best_ret = -std::numeric_limits<double>::infinity();
  Vec best_action;
  std::size_t valid_rollouts = 0;

  std::vector<ScoredAction> scored(cfg.K);
  for (int m = 0; m < cfg.M; ++m) {
    // K independent rollouts; substream seeds keyed by sample index keep
    // parallel and serial execution bit-identical.
    parallel_for(cfg.K, cfg.rollout_threads, [&](std::size_t k) {
      Rng stream(mix_seed(base, static_cast<std::uint64_t>(m) * cfg.K + k));
      Vec action(mean.size());
      for (std::size_t d = 0; d < action.size(); ++d) {
        action[d] = clip(mean[d] + cfg.sigma_plan * stream.normal(), env.action_low,
                         env.action_high);
      }
      const Rollout rollout =
          imagine_rollout(dynamics, actor, env, obs, action, cfg.H, stream);
      scored[k] = {std::move(action),
                   evaluate_rollout_return(rollout, critic, cfg.return_mode, cfg.gamma),
                   rollout.diverged};
    });

    std::vector<Vec> actions;
    Vec returns;
    actions.reserve(cfg.K);
    returns.reserve(cfg.K);
    double iter_best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < cfg.K; ++k) {
      ScoredAction& s = scored[k];
      if (!s.diverged) ++valid_rollouts;
      if (s.ret > iter_best) iter_best = s.ret;
      if (s.ret > best_ret) {  // strict: ties keep the earliest sample
        best_ret = s.ret;
        best_action = s.action;
      }
      if (cfg.record_samples) {
        result.sampled_actions.push_back(s.action);
        result.sampled_returns.push_back(s.ret);
      }
      actions.push_back(std::move(s.action));
      returns.push_back(s.ret);
    }

    Vec costs(returns.size());
    for (std::size_t i = 0; i < costs.size(); ++i) costs[i] = -returns[i];
    mean = pi2_update(actions, pi2_weights(normalize_costs(costs), cfg.lambda));
    result.per_iteration_best.push_back(cfg.greedy ? best_ret : iter_best);

    if (cfg.inner_actor_update) {
      const Vec& expert = cfg.greedy ? best_action : mean;
      train_actor_imitation(actor, {Vec(obs.begin(), obs.end())}, {expert}, cfg.actor_lr);
    }
  }

  if (valid_rollouts == 0) {
    result.diverged = true;
    result.expert_action = initial_mean;
    result.estimated_return = 0.0;
    return result;
  }

  if (cfg.greedy) {
    result.expert_action = std::move(best_action);
    result.estimated_return = best_ret;
  } else {
    // score the final mean with one dedicated rollout
    Rng stream(mix_seed(base, static_cast<std::uint64_t>(cfg.M) * cfg.K));
    const Rollout rollout = imagine_rollout(dynamics, actor, env, obs, mean, cfg.H, stream);
    result.estimated_return = evaluate_rollout_return(rollout, critic, cfg.return_mode, cfg.gamma);
    result.expert_action = std::move(mean);
  }
  return result;
}

namespace {

PlanResult mpc_random_shooting_plan(std::span<const double> obs, const GaussianPolicy& actor,
                                    const Predictor& dynamics, const EnvSpec& env,
                                    const PlannerConfig& cfg, Rng& rng) {
  const std::uint64_t base = rng.next_u64();
  const std::size_t total = static_cast<std::size_t>(cfg.K) * cfg.M;
  const int act_dim = actor.mean_net.output_dim();

  std::vector<ScoredAction> scored(total);
  parallel_for(total, cfg.rollout_threads, [&](std::size_t j) {
    Rng stream(mix_seed(base, j));
    std::vector<Vec> actions(cfg.H, Vec(act_dim));
    for (int h = 0; h < cfg.H; ++h) {
      for (int d = 0; d < act_dim; ++d) {
        actions[h][d] = stream.uniform(env.action_low, env.action_high);
      }
    }
    const Rollout rollout = imagine_rollout_actions(dynamics, env, obs, actions);
    scored[j] = {std::move(actions[0]),
                 evaluate_rollout_return(rollout, nullptr, ReturnMode::monte_carlo, cfg.gamma),
                 rollout.diverged};
  });

  PlanResult result;
  result.iterations_used = cfg.M;
  double best_ret = -std::numeric_limits<double>::infinity();
  std::size_t best_j = 0;
  std::size_t valid = 0;
  for (std::size_t j = 0; j < total; ++j) {
    if (!scored[j].diverged) ++valid;
    if (scored[j].ret > best_ret) {
      best_ret = scored[j].ret;
      best_j = j;
    }
    if (cfg.record_samples) {
      result.sampled_actions.push_back(scored[j].action);
      result.sampled_returns.push_back(scored[j].ret);
    }
    if ((j + 1) % cfg.K == 0) result.per_iteration_best.push_back(best_ret);
  }
  if (valid == 0) {
    result.diverged = true;
    result.expert_action = clip(actor.mean(obs), env.action_low, env.action_high);
    result.estimated_return = 0.0;
    return result;
  }
  result.expert_action = scored[best_j].action;
  result.estimated_return = best_ret;
  return result;
}

}  // namespace

PlanResult baseline_plan(std::span<const double> obs, const GaussianPolicy& actor,
                         const Predictor& dynamics, const EnvSpec& env,
                         const PlannerConfig& cfg, BaselineMode mode, Rng& rng) {
  if (mode == BaselineMode::mpc_random_shooting) {
    return mpc_random_shooting_plan(obs, actor, dynamics, env, cfg, rng);
  }
  PlannerConfig vanilla = cfg;
  vanilla.return_mode = ReturnMode::monte_carlo;
  vanilla.greedy = false;
  vanilla.inner_actor_update = false;
  // the actor is not updated on this path
  auto& mutable_actor = const_cast<GaussianPolicy&>(actor);
  return critic_pi2_plan(obs, mutable_actor, nullptr, dynamics, env, vanilla, rng);
}

}  // namespace cpi2
