#pragma once

#include <span>
#include <string>
#include <utility>

#include "cpi2/rng.hpp"
#include "cpi2/util.hpp"

namespace cpi2 {

enum class EnvKind { InvertedPendulum, InvertedDoublePendulum };

std::string env_kind_name(EnvKind kind);
EnvKind env_kind_from_name(const std::string& name);

/// Static description of one benchmark environment: dimensions, bounds,
/// integration step and the physical constants of its analytic dynamics.
///
/// InvertedPendulum is a cart on a rail with a single pole hinged to it
/// (uniform rod, parameterized by half-length). InvertedDoublePendulum adds a
/// second rod hinged to the tip of the first. Both are frictionless and
/// integrated with semi-implicit Euler.
struct EnvSpec {
  EnvKind kind = EnvKind::InvertedPendulum;
  int obs_dim = 4;
  int action_dim = 1;
  double action_low = -3.0;
  double action_high = 3.0;
  int steps_per_epoch = 500;
  double dt = 0.02;
  double gravity = 9.8;
  double reset_noise = 0.01;
  // Reward assigned to the remaining steps of an imagined rollout whose
  // predicted state went non-finite.
  double reward_floor = 0.0;

  // Cart-pole constants (InvertedPendulum).
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double pole_half_length = 0.5;

  // Cart double-pendulum constants (InvertedDoublePendulum). Rod lengths of
  // 1 m each put the upright tip at height 2, the reward function's target.
  double link_mass1 = 0.05;
  double link_mass2 = 0.05;
  double link_length1 = 1.0;
  double link_length2 = 1.0;

  double action_half_range() const { return 0.5 * (action_high - action_low); }
};

EnvSpec make_env_spec(EnvKind kind);

/// Full physical state: generalized coordinates q, velocities qd and the
/// step counter. For InvertedPendulum q = {cart x, pole angle}; for
/// InvertedDoublePendulum q = {cart x, angle 1, angle 2}. Angles are measured
/// from the upright vertical.
struct EnvState {
  Vec q;
  Vec qd;
  int step_count = 0;
};

struct StepResult {
  Vec observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  // Set when the integrator produced a non-finite state; implies terminated.
  bool diverged = false;
};

/// Generalized accelerations at the given state under the given cart force.
Vec generalized_accel(const EnvSpec& spec, const EnvState& state, double force);

/// One semi-implicit Euler step: velocities first, then positions with the
/// updated velocities. Does not touch step_count.
EnvState integrate_step(const EnvSpec& spec, const EnvState& state, double force);

Vec observe(const EnvSpec& spec, const EnvState& state);

/// Reward of the post-step state, as a function of the observation alone.
/// Used both by the real environment and by imagined rollouts.
double reward_from_obs(const EnvSpec& spec, std::span<const double> obs);

/// Termination predicate on an observation. Non-finite observations count as
/// terminal.
bool terminal_from_obs(const EnvSpec& spec, std::span<const double> obs);

/// Kinetic + potential energy; conserved by the exact dynamics at zero force.
double mechanical_energy(const EnvSpec& spec, const EnvState& state);

/// Fresh episode state near the upright equilibrium, all coordinates and
/// velocities perturbed uniformly in [-reset_noise, reset_noise].
std::pair<EnvState, Vec> env_reset(const EnvSpec& spec, Rng& rng);

/// Advances the environment by one step. The action is clipped to the spec's
/// bounds before integration. Reward and termination are computed from the
/// post-step observation; truncation triggers when step_count reaches
/// steps_per_epoch without termination.
std::pair<EnvState, StepResult> env_step(const EnvSpec& spec, const EnvState& state,
                                         std::span<const double> action);

}  // namespace cpi2
