#include "cpi2/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace cpi2 {

Vec Normalizer::normalize(std::span<const double> x) const {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / std[i];
  return out;
}

Vec Normalizer::denormalize(std::span<const double> x) const {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * std[i] + mean[i];
  return out;
}

DynamicsModel::DynamicsModel(int obs_dim, int action_dim, const std::vector<int>& hidden,
                             Rng& rng)
    : obs_dim_(obs_dim), action_dim_(action_dim) {
  std::vector<int> sizes;
  sizes.push_back(obs_dim + action_dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(obs_dim);
  net_ = Mlp::init(std::move(sizes), rng, 0.01);
  input_norm_ = Normalizer::identity(obs_dim + action_dim);
  target_norm_ = Normalizer::identity(obs_dim);
}

Vec DynamicsModel::predict_next(std::span<const double> obs,
                                std::span<const double> action) const {
  if (obs.size() != static_cast<std::size_t>(obs_dim_) ||
      action.size() != static_cast<std::size_t>(action_dim_)) {
    throw std::invalid_argument("DynamicsModel::predict_next: dimension mismatch");
  }
  Vec in;
  in.reserve(obs.size() + action.size());
  in.insert(in.end(), obs.begin(), obs.end());
  in.insert(in.end(), action.begin(), action.end());
  const Vec delta = target_norm_.denormalize(net_.forward(input_norm_.normalize(in)));
  Vec next(obs.begin(), obs.end());
  for (std::size_t i = 0; i < next.size(); ++i) next[i] += delta[i];
  return next;
}

double DynamicsModel::train_batch(std::span<const Transition> batch, double lr) {
  if (batch.empty()) throw std::invalid_argument("DynamicsModel::train_batch: empty batch");
  std::vector<Vec> inputs;
  std::vector<Vec> targets;
  inputs.reserve(batch.size());
  targets.reserve(batch.size());
  for (const Transition& t : batch) {
    Vec in;
    in.reserve(t.obs.size() + t.action.size());
    in.insert(in.end(), t.obs.begin(), t.obs.end());
    in.insert(in.end(), t.action.begin(), t.action.end());
    inputs.push_back(input_norm_.normalize(in));
    Vec delta(t.next_obs.size());
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = t.next_obs[i] - t.obs[i];
    targets.push_back(target_norm_.normalize(delta));
  }
  return net_.train_step(inputs, targets, LossKind::mse, lr);
}

void DynamicsModel::set_normalization(Normalizer input, Normalizer target) {
  for (double& s : input.std) s = std::max(s, kNormalizerStdFloor);
  for (double& s : target.std) s = std::max(s, kNormalizerStdFloor);
  input_norm_ = std::move(input);
  target_norm_ = std::move(target);
}

std::pair<Normalizer, Normalizer> fit_dynamics_normalizers(const ReplayBuffer& buffer) {
  if (buffer.empty()) throw std::runtime_error("fit_dynamics_normalizers: buffer empty");
  const std::size_t obs_dim = buffer[0].obs.size();
  const std::size_t act_dim = buffer[0].action.size();
  Normalizer input{Vec(obs_dim + act_dim, 0.0), Vec(obs_dim + act_dim, 0.0)};
  Normalizer target{Vec(obs_dim, 0.0), Vec(obs_dim, 0.0)};
  const double inv_n = 1.0 / static_cast<double>(buffer.size());

  for (std::size_t k = 0; k < buffer.size(); ++k) {
    const Transition& t = buffer[k];
    for (std::size_t i = 0; i < obs_dim; ++i) {
      input.mean[i] += t.obs[i] * inv_n;
      target.mean[i] += (t.next_obs[i] - t.obs[i]) * inv_n;
    }
    for (std::size_t i = 0; i < act_dim; ++i) input.mean[obs_dim + i] += t.action[i] * inv_n;
  }
  for (std::size_t k = 0; k < buffer.size(); ++k) {
    const Transition& t = buffer[k];
    for (std::size_t i = 0; i < obs_dim; ++i) {
      const double di = t.obs[i] - input.mean[i];
      input.std[i] += di * di * inv_n;
      const double dt = (t.next_obs[i] - t.obs[i]) - target.mean[i];
      target.std[i] += dt * dt * inv_n;
    }
    for (std::size_t i = 0; i < act_dim; ++i) {
      const double da = t.action[i] - input.mean[obs_dim + i];
      input.std[obs_dim + i] += da * da * inv_n;
    }
  }
  for (double& s : input.std) s = std::max(std::sqrt(s), kNormalizerStdFloor);
  for (double& s : target.std) s = std::max(std::sqrt(s), kNormalizerStdFloor);
  return {std::move(input), std::move(target)};
}

Predictor make_predictor(const DynamicsModel& model) {
  return [&model](std::span<const double> obs, std::span<const double> action) {
    return model.predict_next(obs, action);
  };
}

namespace {

// Shared stepping core; `next_action` provides the action for each step.
template <typename NextAction>
Rollout roll(const Predictor& predict, const EnvSpec& env, std::span<const double> start_obs,
             int horizon, NextAction&& next_action) {
  if (horizon < 1) throw std::invalid_argument("imagine_rollout: horizon must be >= 1");
  Rollout r;
  r.observations.reserve(horizon + 1);
  r.actions.reserve(horizon);
  r.rewards.reserve(horizon);
  r.behavior_log_probs.reserve(horizon);
  r.observations.emplace_back(start_obs.begin(), start_obs.end());

  for (int h = 0; h < horizon; ++h) {
    const Vec& obs = r.observations.back();
    auto [action, log_prob] = next_action(h, obs);
    Vec next = predict(obs, action);
    if (!all_finite(next)) {
      r.diverged = true;
      r.terminated = true;
      for (int hh = h; hh < horizon; ++hh) r.rewards.push_back(env.reward_floor);
      break;
    }
    r.actions.push_back(std::move(action));
    r.behavior_log_probs.push_back(log_prob);
    r.rewards.push_back(reward_from_obs(env, next));
    r.observations.push_back(std::move(next));
    if (terminal_from_obs(env, r.observations.back())) {
      r.terminated = true;
      break;
    }
  }
  return r;
}

}  // namespace

Rollout imagine_rollout(const Predictor& predict, const GaussianPolicy& actor,
                        const EnvSpec& env, std::span<const double> start_obs,
                        std::span<const double> first_action, int horizon, Rng& rng) {
  // a degenerate (sigma = 0) actor has no density; record 0 in that case
  bool has_density = true;
  for (double s : actor.sigma) has_density = has_density && s > 0.0;
  return roll(predict, env, start_obs, horizon,
              [&, has_density](int h, const Vec& obs) -> std::pair<Vec, double> {
                Vec a = (h == 0) ? Vec(first_action.begin(), first_action.end())
                                 : clip(actor.sample(obs, rng), env.action_low, env.action_high);
                const double lp = has_density ? actor.log_prob(obs, a) : 0.0;
                return {std::move(a), lp};
              });
}

Rollout imagine_rollout_actions(const Predictor& predict, const EnvSpec& env,
                                std::span<const double> start_obs,
                                const std::vector<Vec>& actions) {
  return roll(predict, env, start_obs, static_cast<int>(actions.size()),
              [&](int h, const Vec&) -> std::pair<Vec, double> {
                return {actions[h], 0.0};
              });
}

}  // namespace cpi2
