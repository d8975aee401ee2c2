#pragma once

#include <optional>

#include "cpi2/actor_critic.hpp"
#include "cpi2/config.hpp"
#include "cpi2/dynamics.hpp"
#include "cpi2/env.hpp"
#include "cpi2/planner.hpp"
#include "cpi2/replay.hpp"

namespace cpi2 {

/// All learned components of one agent. DDPG-specific networks are built for
/// every kind (cheap) and used only when relevant.
struct Agent {
  AgentKind kind = AgentKind::critic_pi2;
  EnvSpec env;
  PlannerConfig planner;
  GaussianPolicy actor;
  Critic critic;
  DynamicsModel dynamics;
  Critic q_net;
  Critic q_target;
  GaussianPolicy actor_target;
  double ddpg_exploration_sigma = 0.0;  // raw action units
  double ddpg_tau = 0.005;
  bool train_actor = true;  // central imitation step on/off
};

Agent make_agent(const ExperimentConfig& cfg);

/// Chooses one action. Training mode may update the actor in place (the
/// planner's inner imitation steps); eval mode works on a copy and leaves the
/// agent untouched. plan_seconds, when given, receives the wall-clock cost of
/// the decision.
Vec agent_act(Agent& agent, std::span<const double> obs, Rng& rng, bool eval,
              double* plan_seconds = nullptr);

struct EpisodeRecord {
  double total_return = 0.0;
  int length = 0;
  double mean_plan_seconds = 0.0;
};

/// One real-environment episode. With a buffer, every transition is stored
/// together with the actor's log density of the executed action; with
/// buffer == nullptr this is an evaluation episode and nothing is stored.
EpisodeRecord run_episode(Agent& agent, ReplayBuffer* buffer, Rng& rng, bool eval);

struct LossSummary {
  Vec dynamics;  // one entry per epoch
  Vec critic;
  Vec actor;
};

/// One central-training phase: refreshes dynamics normalization from the
/// buffer, then runs cfg.training.epochs rounds of dynamics, critic and
/// (unless disabled) actor-imitation updates. DDPG agents instead run
/// epochs * epoch_multiplier DDPG updates. Returns empty summaries (with a
/// warning on stderr) when the buffer is too small to sample a batch.
LossSummary central_training(Agent& agent, const ReplayBuffer& buffer,
                             const ExperimentConfig& cfg, Rng& rng);

/// One learning-curve row per training episode. Optional fields are written
/// as empty CSV cells when absent.
struct ResultRow {
  int episode = 0;
  std::optional<double> eval_return;
  std::optional<double> dynamics_loss;
  std::optional<double> critic_loss;
  std::optional<double> actor_loss;
  std::optional<double> mean_plan_time_s;
  std::optional<double> wall_time_s;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<EpisodeRecord> episodes;
  Agent agent;
};

/// Full training run: cfg.training.episodes episodes with central training
/// every train_every episodes and an evaluation round (mean over
/// eval_episodes greedy-protocol episodes, no buffer writes) every
/// eval_every episodes. Fully determined by (seed, config) apart from the
/// wall-clock fields.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace cpi2
