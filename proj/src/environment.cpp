#include "wrl/environment.hpp"

#include <stdexcept>
#include <utility>

namespace wrl {

std::vector<double> CartPoleEnv::reset(Rng& rng) {
  st_ = cartpole_reset(params_, rng);
  return st_.s;
}

Environment::Step CartPoleEnv::peek(int action, Rng&) const {
  auto [next, cost] = cartpole_step(st_, action, params_);
  return Step{next.s, cost, next.done};
}

Environment::Step CartPoleEnv::step(int action, Rng&) {
  auto [next, cost] = cartpole_step(st_, action, params_);
  Step out{next.s, cost, next.done};
  st_ = std::move(next);
  return out;
}

FiniteMDPEnv::FiniteMDPEnv(FiniteMDP mdp) : mdp_(std::move(mdp)) {
  mdp_.validate();
  const int actions = mdp_.action_count(0);
  for (int x = 1; x < mdp_.state_count(); ++x) {
    if (mdp_.action_count(x) != actions)
      throw std::invalid_argument(
          "FiniteMDPEnv: sampling needs a uniform action count across states");
  }
  obs_ = one_hot(0);
}

int FiniteMDPEnv::action_count() const { return mdp_.action_count(0); }

std::vector<double> FiniteMDPEnv::one_hot(int idx) const {
  std::vector<double> v(mdp_.state_count(), 0.0);
  v[idx] = 1.0;
  return v;
}

std::vector<double> FiniteMDPEnv::reset(Rng& rng) {
  idx_ = static_cast<int>(rng.below(static_cast<std::uint64_t>(mdp_.state_count())));
  obs_ = one_hot(idx_);
  return obs_;
}

Environment::Step FiniteMDPEnv::peek(int action, Rng& rng) const {
  if (action < 0 || action >= action_count())
    throw std::invalid_argument("FiniteMDPEnv: action index out of range");
  const int next = rng.categorical(mdp_.transition[idx_][action]);
  return Step{one_hot(next), mdp_.cost[idx_][action], false};
}

Environment::Step FiniteMDPEnv::step(int action, Rng& rng) {
  Step out = peek(action, rng);
  for (int i = 0; i < mdp_.state_count(); ++i) {
    if (out.y[i] == 1.0) {
      idx_ = i;
      break;
    }
  }
  obs_ = out.y;
  return out;
}

}  // namespace wrl
