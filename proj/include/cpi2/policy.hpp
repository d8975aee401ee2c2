#pragma once

#include <span>

#include "cpi2/mlp.hpp"
#include "cpi2/rng.hpp"
#include "cpi2/util.hpp"

namespace cpi2 {

/// Diagonal Gaussian policy: the mean comes from an MLP, the standard
/// deviation is fixed per action dimension for the whole experiment.
struct GaussianPolicy {
  Mlp mean_net;
  Vec sigma;

  Vec mean(std::span<const double> obs) const { return mean_net.forward(obs); }

  Vec sample(std::span<const double> obs, Rng& rng) const;

  /// Log density of `action` under N(mean(obs), diag(sigma^2)).
  double log_prob(std::span<const double> obs, std::span<const double> action) const;
};

GaussianPolicy make_gaussian_policy(int obs_dim, int action_dim,
                                    const std::vector<int>& hidden, double sigma, Rng& rng);

}  // namespace cpi2
