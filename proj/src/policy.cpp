#include "cpi2/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace cpi2 {

Vec GaussianPolicy::sample(std::span<const double> obs, Rng& rng) const {
  Vec a = mean_net.forward(obs);
  for (std::size_t d = 0; d < a.size(); ++d) {
    a[d] += sigma[d] * rng.normal();
  }
  return a;
}

double GaussianPolicy::log_prob(std::span<const double> obs, std::span<const double> action) const {
  constexpr double half_log_2pi = 0.9189385332046727;
  const Vec mu = mean_net.forward(obs);
  if (action.size() != mu.size()) {
    throw std::invalid_argument("GaussianPolicy::log_prob: action dimension mismatch");
  }
  double lp = 0.0;
  for (std::size_t d = 0; d < mu.size(); ++d) {
    if (sigma[d] <= 0.0) {
      throw std::invalid_argument("GaussianPolicy::log_prob: sigma must be positive");
    }
    const double z = (action[d] - mu[d]) / sigma[d];
    lp += -0.5 * z * z - std::log(sigma[d]) - half_log_2pi;
  }
  return lp;
}

GaussianPolicy make_gaussian_policy(int obs_dim, int action_dim,
                                    const std::vector<int>& hidden, double sigma, Rng& rng) {
  std::vector<int> sizes;
  sizes.push_back(obs_dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(action_dim);
  GaussianPolicy policy;
  policy.mean_net = Mlp::init(std::move(sizes), rng);
  policy.sigma.assign(action_dim, sigma);
  return policy;
}

}  // namespace cpi2
