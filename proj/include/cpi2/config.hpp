#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpi2/env.hpp"
#include "cpi2/planner.hpp"

namespace cpi2 {

enum class AgentKind { critic_pi2, vanilla_pi2, mpc, ddpg, random };

std::string agent_kind_name(AgentKind kind);
AgentKind agent_kind_from_name(const std::string& name);

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Full experiment description. Sigma-like quantities in this struct are in
/// normalized action units (fractions of the action half-range); they are
/// converted to raw units when the agent is built for a concrete
/// environment. planner.H/return_mode/greedy/inner_actor_update may be left
/// unset in the file, in which case agent-specific defaults apply.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  AgentKind agent = AgentKind::critic_pi2;

  EnvSpec env = make_env_spec(EnvKind::InvertedPendulum);

  struct Planner {
    int K = 50;
    int M = 10;
    std::optional<int> H;
    double lambda = 0.3;
    double sigma_plan = 0.3;  // normalized
    std::optional<ReturnMode> return_mode;
    std::optional<bool> greedy;
    std::optional<bool> inner_actor_update;
    int rollout_threads = 1;
    bool record_samples = false;
  } planner;

  struct Networks {
    std::vector<int> hidden = {64, 64};
    // Adam caps per-coordinate movement at roughly lr per step; these rates
    // are sized so values (scale ~1/(1-gamma)) and action means (scale of the
    // action range) can actually be reached within a desk-scale run.
    double actor_lr = 1e-3;
    double critic_lr = 1e-2;
    double dynamics_lr = 1e-3;
    double policy_sigma = 0.3;  // normalized
  } networks;

  struct Training {
    int episodes = 100;
    int epochs = 100;
    int train_every = 2;
    int eval_every = 2;
    int eval_episodes = 3;
    int batch_size = 256;
    int replay_capacity = 100000;
    double gamma = 0.99;
    int n_step = 5;
    double rho_bar = 1.0;
    double c_bar = 1.0;
  } training;

  struct Ddpg {
    double exploration_sigma = 0.1;  // normalized
    double tau = 0.005;
    int epoch_multiplier = 10;
  } ddpg;

  struct Ablation {
    bool no_critic = false;
    bool no_greedy = false;
    bool no_actor_training = false;
    std::vector<std::uint64_t> seeds = {0, 1, 2};
  } ablation;

  struct Benchmark {
    int calls = 100;
    int warmup = 2;
  } benchmark;

  struct Output {
    bool timing = true;
  } output;

  /// Planner configuration with agent defaults and ablation switches
  /// resolved, sigma converted to raw action units.
  PlannerConfig resolved_planner() const;

  /// Re-validates every invariant, naming the offending field on failure.
  void validate() const;
};

/// Loads `path` (JSON; an empty or absent file means all defaults), then
/// applies dotted key=value overrides. Unknown keys are rejected by name.
ExperimentConfig parse_config(const std::optional<std::filesystem::path>& path,
                              const std::vector<std::string>& overrides);

/// Resolved-config echo used for summaries and the ablation config diff.
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace cpi2
