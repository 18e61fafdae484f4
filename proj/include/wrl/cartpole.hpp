#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "wrl/rng.hpp"

namespace wrl {

/**
 * Pole-on-cart physics, classic parametrization. half_length is the
 * distance from the pivot to the pole's center of mass; the angle
 * threshold is in radians. Costs are 0 while the pole survives a step
 * and 1 on the transition that trips a position or angle limit; running
 * into the step cap ends the episode at zero cost.
 */
struct CartPoleParams {
  double gravity = 9.8;
  double mass_cart = 1.0;
  double mass_pole = 0.1;
  double half_length = 0.5;
  double force_mag = 10.0;
  double tau = 0.02;
  double theta_threshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
  double x_threshold = 2.4;
  int max_steps = 200;

  double total_mass() const { return mass_cart + mass_pole; }
  double pole_mass_length() const { return mass_pole * half_length; }
  void validate() const;
};

// (x, x_dot, theta, theta_dot) plus episode bookkeeping. done holds
// exactly when a limit was tripped or the step cap was reached.
struct EnvState {
  std::vector<double> s{0.0, 0.0, 0.0, 0.0};
  int steps = 0;
  bool done = false;
};

// Fresh episode: all four coordinates uniform in [-0.05, 0.05], drawn in
// state order from a stream seeded with `seed`.
EnvState cartpole_reset(const CartPoleParams& params, std::uint64_t seed);

// Same draw, but from a live stream (used by the trainers so one seed
// covers the entire run).
EnvState cartpole_reset(const CartPoleParams& params, Rng& rng);

/**
 * One Euler step under action 0 (push left) or 1 (push right). The
 * position coordinates advance with the pre-step velocities, then the
 * velocities with the fresh accelerations. Returns the new state and the
 * step cost. Stepping a finished episode is a usage error.
 */
std::pair<EnvState, double> cartpole_step(const EnvState& state, int action,
                                          const CartPoleParams& params);

// Action chooser: observes the state, may consume randomness.
using ActionSampler = std::function<int(std::span<const double>, Rng&)>;

struct EpisodeResult {
  int survived_steps = 0;
  double total_cost = 0.0;
  struct Step {
    std::vector<double> x;
    int action;
    double cost;
    std::vector<double> y;
    bool terminal;
  };
  std::vector<Step> transitions;
};

// Rolls one episode from a seeded reset until done, capping at max_steps
// regardless of the params cap. A fixed seed and a deterministic sampler
// reproduce the trajectory exactly.
EpisodeResult run_episode(const ActionSampler& policy, const CartPoleParams& params,
                          std::uint64_t seed, int max_steps);

}  // namespace wrl
