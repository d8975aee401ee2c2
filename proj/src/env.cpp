#include "cpi2/env.hpp"

#include <cmath>
#include <stdexcept>

namespace cpi2 {

std::string env_kind_name(EnvKind kind) {
  switch (kind) {
    case EnvKind::InvertedPendulum:
      return "InvertedPendulum";
    case EnvKind::InvertedDoublePendulum:
      return "InvertedDoublePendulum";
  }
  return "unknown";
}

EnvKind env_kind_from_name(const std::string& name) {
  if (name == "InvertedPendulum") return EnvKind::InvertedPendulum;
  if (name == "InvertedDoublePendulum") return EnvKind::InvertedDoublePendulum;
  throw std::invalid_argument("unknown environment name: " + name);
}

EnvSpec make_env_spec(EnvKind kind) {
  EnvSpec s;
  s.kind = kind;
  if (kind == EnvKind::InvertedPendulum) {
    s.obs_dim = 4;
    s.action_low = -3.0;
    s.action_high = 3.0;
    s.cart_mass = 1.0;
    s.reward_floor = 0.0;
  } else {
    s.obs_dim = 11;
    s.action_low = -1.0;
    s.action_high = 1.0;
    s.cart_mass = 0.5;
    s.reward_floor = -10.0;
  }
  return s;
}

namespace {

// Cart-pole equations of motion with the pole as a uniform rod of half-length
// l hinged to the cart; angle measured from the upright vertical, force along
// the rail. The 4/3 factor is the rod's inertia about the hinge per m*l.
void cart_pole_accel(const EnvSpec& s, const EnvState& st, double force, double& xdd,
                     double& thdd) {
  const double m = s.pole_mass;
  const double total = s.cart_mass + m;
  const double l = s.pole_half_length;
  const double sin_th = std::sin(st.q[1]);
  const double cos_th = std::cos(st.q[1]);
  const double thd = st.qd[1];
  const double tmp = (-force - m * l * thd * thd * sin_th) / total;
  thdd = (s.gravity * sin_th + cos_th * tmp) /
         (l * (4.0 / 3.0 - m * cos_th * cos_th / total));
  xdd = (force + m * l * (thd * thd * sin_th - thdd * cos_th)) / total;
}

void solve3x3(const double a[3][3], const double b[3], double x[3]) {
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  const double d0 = b[0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                    a[0][1] * (b[1] * a[2][2] - a[1][2] * b[2]) +
                    a[0][2] * (b[1] * a[2][1] - a[1][1] * b[2]);
  const double d1 = a[0][0] * (b[1] * a[2][2] - a[1][2] * b[2]) -
                    b[0] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                    a[0][2] * (a[1][0] * b[2] - b[1] * a[2][0]);
  const double d2 = a[0][0] * (a[1][1] * b[2] - b[1] * a[2][1]) -
                    a[0][1] * (a[1][0] * b[2] - b[1] * a[2][0]) +
                    b[0] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  x[0] = d0 / det;
  x[1] = d1 / det;
  x[2] = d2 / det;
}

// Cart double-pendulum (two uniform rods) via the Lagrangian mass matrix.
// Generalized coordinates: cart position, two link angles from upright.
void double_pendulum_accel(const EnvSpec& s, const EnvState& st, double force, double out[3]) {
  const double m0 = s.cart_mass, m1 = s.link_mass1, m2 = s.link_mass2;
  const double l1 = s.link_length1, l2 = s.link_length2;
  const double g = s.gravity;
  const double th1 = st.q[1], th2 = st.q[2];
  const double w1 = st.qd[1], w2 = st.qd[2];
  const double s1 = std::sin(th1), c1 = std::cos(th1);
  const double s2 = std::sin(th2), c2 = std::cos(th2);
  const double c12 = std::cos(th1 - th2), s12 = std::sin(th1 - th2);

  const double total = m0 + m1 + m2;
  const double h1 = m1 * l1 / 2.0 + m2 * l1;   // cart/link-1 coupling
  const double h2 = m2 * l2 / 2.0;             // cart/link-2 coupling
  const double h12 = m2 * l1 * l2 / 2.0;       // link-1/link-2 coupling
  const double j1 = m1 * l1 * l1 / 3.0 + m2 * l1 * l1;  // link-1 inertia about hinge
  const double j2 = m2 * l2 * l2 / 3.0;                 // link-2 inertia about hinge

  const double mass[3][3] = {{total, h1 * c1, h2 * c2},
                             {h1 * c1, j1, h12 * c12},
                             {h2 * c2, h12 * c12, j2}};
  const double rhs[3] = {force + h1 * w1 * w1 * s1 + h2 * w2 * w2 * s2,
                         h1 * g * s1 - h12 * w2 * w2 * s12,
                         h2 * g * s2 + h12 * w1 * w1 * s12};
  solve3x3(mass, rhs, out);
}

double double_pendulum_tip_height(const EnvSpec& s, double cos1, double cos2) {
  return s.link_length1 * cos1 + s.link_length2 * cos2;
}

}  // namespace

Vec generalized_accel(const EnvSpec& spec, const EnvState& state, double force) {
  if (spec.kind == EnvKind::InvertedPendulum) {
    double xdd = 0.0, thdd = 0.0;
    cart_pole_accel(spec, state, force, xdd, thdd);
    return {xdd, thdd};
  }
  double a[3];
  double_pendulum_accel(spec, state, force, a);
  return {a[0], a[1], a[2]};
}

EnvState integrate_step(const EnvSpec& spec, const EnvState& state, double force) {
  const Vec acc = generalized_accel(spec, state, force);
  EnvState next = state;
  for (std::size_t i = 0; i < next.qd.size(); ++i) {
    next.qd[i] += acc[i] * spec.dt;
    next.q[i] += next.qd[i] * spec.dt;
  }
  return next;
}

Vec observe(const EnvSpec& spec, const EnvState& state) {
  if (spec.kind == EnvKind::InvertedPendulum) {
    return {state.q[0], state.q[1], state.qd[0], state.qd[1]};
  }
  // [x, sin1, sin2, cos1, cos2, xd, w1, w2, cf1, cf2, cf3]; the three
  // constraint-force slots are fixed at zero in the analytic simulator.
  return {state.q[0],
          std::sin(state.q[1]),
          std::sin(state.q[2]),
          std::cos(state.q[1]),
          std::cos(state.q[2]),
          state.qd[0],
          state.qd[1],
          state.qd[2],
          0.0,
          0.0,
          0.0};
}

double reward_from_obs(const EnvSpec& spec, std::span<const double> obs) {
  if (spec.kind == EnvKind::InvertedPendulum) {
    (void)obs;
    return 1.0;
  }
  const double x = obs[0];
  const double xd = obs[5];
  const double tip_y = double_pendulum_tip_height(spec, obs[3], obs[4]);
  // d/dt of the tip height from the angle rates.
  const double tip_yd = -spec.link_length1 * obs[1] * obs[6] - spec.link_length2 * obs[2] * obs[7];
  return 10.0 - 0.01 * x * x - (tip_y - 2.0) * (tip_y - 2.0) - 1e-3 * xd * xd -
         5e-3 * tip_yd * tip_yd;
}

bool terminal_from_obs(const EnvSpec& spec, std::span<const double> obs) {
  if (!all_finite(obs)) return true;
  if (spec.kind == EnvKind::InvertedPendulum) {
    return std::abs(obs[1]) >= 0.2;
  }
  return double_pendulum_tip_height(spec, obs[3], obs[4]) <= 1.0;
}

double mechanical_energy(const EnvSpec& spec, const EnvState& state) {
  if (spec.kind == EnvKind::InvertedPendulum) {
    const double m = spec.pole_mass, l = spec.pole_half_length;
    const double xd = state.qd[0], thd = state.qd[1];
    const double c = std::cos(state.q[1]);
    const double ke = 0.5 * spec.cart_mass * xd * xd +
                      0.5 * m * (xd * xd + 2.0 * l * xd * thd * c + l * l * thd * thd) +
                      0.5 * (m * l * l / 3.0) * thd * thd;
    return ke + m * spec.gravity * l * c;
  }
  const double m0 = spec.cart_mass, m1 = spec.link_mass1, m2 = spec.link_mass2;
  const double l1 = spec.link_length1, l2 = spec.link_length2;
  const double xd = state.qd[0], w1 = state.qd[1], w2 = state.qd[2];
  const double c1 = std::cos(state.q[1]), c2 = std::cos(state.q[2]);
  const double c12 = std::cos(state.q[1] - state.q[2]);
  const double j1 = m1 * l1 * l1 / 3.0 + m2 * l1 * l1;
  const double j2 = m2 * l2 * l2 / 3.0;
  const double h1 = m1 * l1 / 2.0 + m2 * l1;
  const double h2 = m2 * l2 / 2.0;
  const double h12 = m2 * l1 * l2 / 2.0;
  const double ke = 0.5 * (m0 + m1 + m2) * xd * xd + 0.5 * j1 * w1 * w1 + 0.5 * j2 * w2 * w2 +
                    h1 * xd * w1 * c1 + h2 * xd * w2 * c2 + h12 * w1 * w2 * c12;
  const double pe = spec.gravity * (h1 * c1 + h2 * c2);
  return ke + pe;
}

std::pair<EnvState, Vec> env_reset(const EnvSpec& spec, Rng& rng) {
  const std::size_t dof = spec.kind == EnvKind::InvertedPendulum ? 2 : 3;
  EnvState state;
  state.q.resize(dof);
  state.qd.resize(dof);
  for (std::size_t i = 0; i < dof; ++i) {
    state.q[i] = rng.uniform(-spec.reset_noise, spec.reset_noise);
  }
  for (std::size_t i = 0; i < dof; ++i) {
    state.qd[i] = rng.uniform(-spec.reset_noise, spec.reset_noise);
  }
  state.step_count = 0;
  return {state, observe(spec, state)};
}

std::pair<EnvState, StepResult> env_step(const EnvSpec& spec, const EnvState& state,
                                         std::span<const double> action) {
  if (action.size() != static_cast<std::size_t>(spec.action_dim)) {
    throw std::invalid_argument("env_step: action dimension mismatch");
  }
  const double force = clip(action[0], spec.action_low, spec.action_high);
  EnvState next = integrate_step(spec, state, force);
  next.step_count = state.step_count + 1;

  StepResult result;
  result.observation = observe(spec, next);
  result.diverged = !all_finite(result.observation) || !all_finite(next.q) || !all_finite(next.qd);
  result.terminated = result.diverged || terminal_from_obs(spec, result.observation);
  result.truncated = !result.terminated && next.step_count >= spec.steps_per_epoch;
  result.reward = result.diverged ? spec.reward_floor : reward_from_obs(spec, result.observation);
  return {next, result};
}

}  // namespace cpi2
