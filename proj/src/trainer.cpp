#include "cpi2/trainer.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

namespace cpi2 {

namespace {

// substream tags for the per-experiment seed
constexpr std::uint64_t kStreamNets = 1;
constexpr std::uint64_t kStreamTrainEpisode = 2;
constexpr std::uint64_t kStreamEvalEpisode = 3;
constexpr std::uint64_t kStreamCentral = 4;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

Agent make_agent(const ExperimentConfig& cfg) {
  Agent agent;
  agent.kind = cfg.agent;
  agent.env = cfg.env;
  agent.planner = cfg.resolved_planner();
  agent.train_actor = !cfg.ablation.no_actor_training;

  const int obs_dim = cfg.env.obs_dim;
  const int act_dim = cfg.env.action_dim;
  const double half_range = cfg.env.action_half_range();

  Rng actor_rng(mix_seed(cfg.seed, kStreamNets, 0));
  agent.actor = make_gaussian_policy(obs_dim, act_dim, cfg.networks.hidden,
                                     cfg.networks.policy_sigma * half_range, actor_rng);

  std::vector<int> critic_sizes;
  critic_sizes.push_back(obs_dim);
  critic_sizes.insert(critic_sizes.end(), cfg.networks.hidden.begin(), cfg.networks.hidden.end());
  critic_sizes.push_back(1);
  Rng critic_rng(mix_seed(cfg.seed, kStreamNets, 1));
  agent.critic.net = Mlp::init(critic_sizes, critic_rng, 0.01);
  agent.critic.output_scale = 1.0 / (1.0 - cfg.training.gamma);

  Rng dyn_rng(mix_seed(cfg.seed, kStreamNets, 2));
  agent.dynamics = DynamicsModel(obs_dim, act_dim, cfg.networks.hidden, dyn_rng);

  std::vector<int> q_sizes;
  q_sizes.push_back(obs_dim + act_dim);
  q_sizes.insert(q_sizes.end(), cfg.networks.hidden.begin(), cfg.networks.hidden.end());
  q_sizes.push_back(1);
  Rng q_rng(mix_seed(cfg.seed, kStreamNets, 3));
  agent.q_net.net = Mlp::init(q_sizes, q_rng, 0.01);
  agent.q_net.output_scale = 1.0 / (1.0 - cfg.training.gamma);
  agent.q_target = agent.q_net;
  agent.actor_target = agent.actor;

  agent.ddpg_exploration_sigma = cfg.ddpg.exploration_sigma * half_range;
  agent.ddpg_tau = cfg.ddpg.tau;
  return agent;
}

Vec agent_act(Agent& agent, std::span<const double> obs, Rng& rng, bool eval,
              double* plan_seconds) {
  const double t0 = now_seconds();
  Vec action;
  switch (agent.kind) {
    case AgentKind::critic_pi2: {
      const Predictor predict = make_predictor(agent.dynamics);
      if (eval) {
        GaussianPolicy actor_copy = agent.actor;
        action = critic_pi2_plan(obs, actor_copy, &agent.critic, predict, agent.env,
                                 agent.planner, rng)
                     .expert_action;
      } else {
        action = critic_pi2_plan(obs, agent.actor, &agent.critic, predict, agent.env,
                                 agent.planner, rng)
                     .expert_action;
      }
      break;
    }
    case AgentKind::vanilla_pi2: {
      const Predictor predict = make_predictor(agent.dynamics);
      action = baseline_plan(obs, agent.actor, predict, agent.env, agent.planner,
                             BaselineMode::vanilla_pi2, rng)
                   .expert_action;
      break;
    }
    case AgentKind::mpc: {
      const Predictor predict = make_predictor(agent.dynamics);
      action = baseline_plan(obs, agent.actor, predict, agent.env, agent.planner,
                             BaselineMode::mpc_random_shooting, rng)
                   .expert_action;
      break;
    }
    case AgentKind::ddpg: {
      action = agent.actor.mean(obs);
      if (!eval) {
        for (double& a : action) a += agent.ddpg_exploration_sigma * rng.normal();
      }
      action = clip(std::move(action), agent.env.action_low, agent.env.action_high);
      break;
    }
    case AgentKind::random: {
      action.resize(agent.env.action_dim);
      for (double& a : action) a = rng.uniform(agent.env.action_low, agent.env.action_high);
      break;
    }
  }
  if (plan_seconds) *plan_seconds = now_seconds() - t0;
  return action;
}

EpisodeRecord run_episode(Agent& agent, ReplayBuffer* buffer, Rng& rng, bool eval) {
  EpisodeRecord record;
  auto [state, obs] = env_reset(agent.env, rng);
  double plan_total = 0.0;
  bool first = true;
  while (true) {
    double plan_seconds = 0.0;
    const Vec action = agent_act(agent, obs, rng, eval, &plan_seconds);
    plan_total += plan_seconds;
    auto [next_state, step] = env_step(agent.env, state, action);
    record.total_return += step.reward;
    record.length += 1;
    if (buffer && !step.diverged) {
      buffer->push(Transition{obs, action, step.reward, step.observation, step.terminated,
                              agent.actor.log_prob(obs, action)},
                   first);
    }
    first = false;
    if (step.terminated || step.truncated) break;
    state = std::move(next_state);
    obs = std::move(step.observation);
  }
  record.mean_plan_seconds = record.length > 0 ? plan_total / record.length : 0.0;
  return record;
}

LossSummary central_training(Agent& agent, const ReplayBuffer& buffer,
                             const ExperimentConfig& cfg, Rng& rng) {
  LossSummary summary;
  if (agent.kind == AgentKind::random) return summary;
  if (buffer.size() < static_cast<std::size_t>(cfg.training.batch_size)) {
    std::cerr << "central_training: buffer too small (" << buffer.size() << " < "
              << cfg.training.batch_size << "), skipping\n";
    return summary;
  }

  if (agent.kind == AgentKind::ddpg) {
    const int epochs = cfg.training.epochs * cfg.ddpg.epoch_multiplier;
    for (int e = 0; e < epochs; ++e) {
      const auto sequences = buffer.sample_sequences(cfg.training.batch_size, 1, rng);
      std::vector<Transition> batch;
      batch.reserve(sequences.size());
      for (const auto& s : sequences) batch.push_back(s.front());
      const DdpgLosses losses =
          ddpg_update(agent.actor, agent.q_net, agent.actor_target, agent.q_target, batch,
                      cfg.training.gamma, cfg.networks.actor_lr, cfg.networks.critic_lr,
                      agent.ddpg_tau);
      summary.critic.push_back(losses.q_loss);
      summary.actor.push_back(-losses.mean_q);
    }
    return summary;
  }

  auto [input_norm, target_norm] = fit_dynamics_normalizers(buffer);
  agent.dynamics.set_normalization(std::move(input_norm), std::move(target_norm));

  const bool train_critic_net = agent.kind == AgentKind::critic_pi2 && !cfg.ablation.no_critic;
  const bool train_actor_net = agent.kind != AgentKind::mpc && agent.train_actor;
  const VtraceConfig vtrace{cfg.training.rho_bar, cfg.training.c_bar, cfg.training.gamma,
                            cfg.training.n_step};
  const std::size_t critic_windows =
      std::max<std::size_t>(1, cfg.training.batch_size / cfg.training.n_step);

  for (int e = 0; e < cfg.training.epochs; ++e) {
    {
      const auto sequences = buffer.sample_sequences(cfg.training.batch_size, 1, rng);
      std::vector<Transition> batch;
      batch.reserve(sequences.size());
      for (const auto& s : sequences) batch.push_back(s.front());
      summary.dynamics.push_back(agent.dynamics.train_batch(batch, cfg.networks.dynamics_lr));
    }
    if (train_critic_net) {
      const auto windows = buffer.sample_sequences(critic_windows, cfg.training.n_step, rng);
      summary.critic.push_back(
          train_critic(agent.critic, windows, agent.actor, vtrace, cfg.networks.critic_lr));
    }
    if (train_actor_net) {
      const auto sequences = buffer.sample_sequences(cfg.training.batch_size, 1, rng);
      std::vector<Vec> states;
      std::vector<Vec> actions;
      states.reserve(sequences.size());
      actions.reserve(sequences.size());
      for (const auto& s : sequences) {
        states.push_back(s.front().obs);
        actions.push_back(s.front().action);
      }
      summary.actor.push_back(
          train_actor_imitation(agent.actor, states, actions, cfg.networks.actor_lr));
    }
  }
  return summary;
}

namespace {

std::optional<double> mean_of(const Vec& v) {
  if (v.empty()) return std::nullopt;
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  result.agent = make_agent(cfg);
  ReplayBuffer buffer(cfg.training.replay_capacity);

  const double wall_start = now_seconds();
  int central_phase = 0;

  for (int e = 1; e <= cfg.training.episodes; ++e) {
    Rng episode_rng(mix_seed(cfg.seed, kStreamTrainEpisode, static_cast<std::uint64_t>(e)));
    const EpisodeRecord record = run_episode(result.agent, &buffer, episode_rng, false);
    result.episodes.push_back(record);

    ResultRow row;
    row.episode = e;
    row.mean_plan_time_s = record.mean_plan_seconds;

    if (e % cfg.training.train_every == 0) {
      Rng central_rng(
          mix_seed(cfg.seed, kStreamCentral, static_cast<std::uint64_t>(central_phase++)));
      const LossSummary losses = central_training(result.agent, buffer, cfg, central_rng);
      row.dynamics_loss = mean_of(losses.dynamics);
      row.critic_loss = mean_of(losses.critic);
      row.actor_loss = mean_of(losses.actor);
    }

    if (e % cfg.training.eval_every == 0) {
      double eval_sum = 0.0;
      for (int j = 0; j < cfg.training.eval_episodes; ++j) {
        Rng eval_rng(mix_seed(cfg.seed, kStreamEvalEpisode,
                              static_cast<std::uint64_t>(e) * 1024 + j));
        eval_sum += run_episode(result.agent, nullptr, eval_rng, true).total_return;
      }
      row.eval_return = eval_sum / cfg.training.eval_episodes;
    }

    row.wall_time_s = now_seconds() - wall_start;
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace cpi2
