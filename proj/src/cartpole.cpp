#include "wrl/cartpole.hpp"

#include <cmath>
#include <stdexcept>

namespace wrl {

void CartPoleParams::validate() const {
  if (!(mass_cart > 0.0) || !(mass_pole > 0.0))
    throw std::invalid_argument("CartPoleParams: masses must be positive");
  if (!(half_length > 0.0)) throw std::invalid_argument("CartPoleParams: half_length must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("CartPoleParams: tau must be positive");
  if (!(force_mag > 0.0)) throw std::invalid_argument("CartPoleParams: force_mag must be positive");
  if (!(theta_threshold > 0.0) || !(x_threshold > 0.0))
    throw std::invalid_argument("CartPoleParams: thresholds must be positive");
  if (max_steps < 1) throw std::invalid_argument("CartPoleParams: max_steps must be >= 1");
}

EnvState cartpole_reset(const CartPoleParams& params, Rng& rng) {
  params.validate();
  EnvState st;
  for (double& c : st.s) c = rng.uniform(-0.05, 0.05);
  return st;
}

EnvState cartpole_reset(const CartPoleParams& params, std::uint64_t seed) {
  Rng rng(seed);
  return cartpole_reset(params, rng);
}

std::pair<EnvState, double> cartpole_step(const EnvState& state, int action,
                                          const CartPoleParams& params) {
  params.validate();
  if (state.done) throw std::invalid_argument("cartpole_step: episode already finished");
  if (action != 0 && action != 1)
    throw std::invalid_argument("cartpole_step: action must be 0 (left) or 1 (right)");

  const double x = state.s[0], x_dot = state.s[1], theta = state.s[2], theta_dot = state.s[3];
  const double force = action == 1 ? params.force_mag : -params.force_mag;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);

  const double temp =
      (force + params.pole_mass_length() * theta_dot * theta_dot * sin_t) / params.total_mass();
  const double theta_acc =
      (params.gravity * sin_t - cos_t * temp) /
      (params.half_length *
       (4.0 / 3.0 - params.mass_pole * cos_t * cos_t / params.total_mass()));
  const double x_acc = temp - params.pole_mass_length() * theta_acc * cos_t / params.total_mass();

  EnvState next;
  next.s[0] = x + params.tau * x_dot;
  next.s[1] = x_dot + params.tau * x_acc;
  next.s[2] = theta + params.tau * theta_dot;
  next.s[3] = theta_dot + params.tau * theta_acc;
  next.steps = state.steps + 1;

  const bool failed = std::abs(next.s[0]) > params.x_threshold ||
                      std::abs(next.s[2]) > params.theta_threshold;
  const bool capped = next.steps >= params.max_steps;
  next.done = failed || capped;
  const double cost = failed ? 1.0 : 0.0;
  return {next, cost};
}

EpisodeResult run_episode(const ActionSampler& policy, const CartPoleParams& params,
                          std::uint64_t seed, int max_steps) {
  if (max_steps < 0) throw std::invalid_argument("run_episode: max_steps must be >= 0");
  Rng rng(seed);
  EnvState st = cartpole_reset(params, rng);
  EpisodeResult out;
  while (!st.done && out.survived_steps < max_steps) {
    const int action = policy(st.s, rng);
    auto [next, cost] = cartpole_step(st, action, params);
    out.transitions.push_back({st.s, action, cost, next.s, next.done});
    out.total_cost += cost;
    ++out.survived_steps;
    st = std::move(next);
  }
  return out;
}

}  // namespace wrl
