#pragma once

#include <functional>
#include <span>

#include "cpi2/env.hpp"
#include "cpi2/mlp.hpp"
#include "cpi2/policy.hpp"
#include "cpi2/replay.hpp"
#include "cpi2/rng.hpp"

namespace cpi2 {

/// Per-coordinate z-score transform with the standard deviation floored so
/// degenerate coordinates stay well-defined.
struct Normalizer {
  Vec mean;
  Vec std;

  static Normalizer identity(int dim) {
    return Normalizer{Vec(dim, 0.0), Vec(dim, 1.0)};
  }

  Vec normalize(std::span<const double> x) const;
  Vec denormalize(std::span<const double> x) const;
};

constexpr double kNormalizerStdFloor = 1e-6;

/// Learned one-step model. The network maps the normalized (obs, action)
/// pair to a normalized state change; the prediction is always
/// obs + denormalized(network output).
class DynamicsModel {
 public:
  DynamicsModel() = default;
  DynamicsModel(int obs_dim, int action_dim, const std::vector<int>& hidden, Rng& rng);

  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  const Normalizer& input_norm() const { return input_norm_; }
  const Normalizer& target_norm() const { return target_norm_; }

  Vec predict_next(std::span<const double> obs, std::span<const double> action) const;

  /// One mse step on the batch's normalized differential targets.
  double train_batch(std::span<const Transition> batch, double lr);

  /// Replaces both normalizers; stds are floored at kNormalizerStdFloor.
  void set_normalization(Normalizer input, Normalizer target);

 private:
  int obs_dim_ = 0;
  int action_dim_ = 0;
  Mlp net_;
  Normalizer input_norm_;
  Normalizer target_norm_;
};

/// Input/target statistics of a replay buffer for dynamics normalization:
/// first the (obs, action) normalizer, then the (next_obs - obs) normalizer.
std::pair<Normalizer, Normalizer> fit_dynamics_normalizers(const ReplayBuffer& buffer);

/// Next-observation predictor; the planner is generic over this so tests can
/// substitute an exact model.
using Predictor = std::function<Vec(std::span<const double>, std::span<const double>)>;

Predictor make_predictor(const DynamicsModel& model);

/// Imagined trajectory through a predictor. Sequences are truncated at an
/// imagined termination; on a non-finite prediction the remaining rewards are
/// filled with the environment's reward floor and the rollout is marked
/// diverged (and terminated, so no value bootstrap applies).
struct Rollout {
  std::vector<Vec> observations;  // horizon + 1 when the rollout runs full length
  std::vector<Vec> actions;
  Vec rewards;
  Vec behavior_log_probs;
  bool terminated = false;
  bool diverged = false;
};

/// Step 0 applies first_action; later steps sample the actor. Rewards and
/// termination come from the environment's analytic reward and termination
/// predicates applied to predicted observations.
Rollout imagine_rollout(const Predictor& predict, const GaussianPolicy& actor,
                        const EnvSpec& env, std::span<const double> start_obs,
                        std::span<const double> first_action, int horizon, Rng& rng);

/// Rollout with a fixed action sequence (no actor); used by random shooting.
Rollout imagine_rollout_actions(const Predictor& predict, const EnvSpec& env,
                                std::span<const double> start_obs,
                                const std::vector<Vec>& actions);

}  // namespace cpi2
