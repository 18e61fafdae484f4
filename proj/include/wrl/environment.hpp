#pragma once

#include <vector>

#include "wrl/cartpole.hpp"
#include "wrl/mdp.hpp"
#include "wrl/rng.hpp"

namespace wrl {

/**
 * Episode-generating environment protocol shared by the trainers.
 *
 * peek() samples a hypothetical transition from the current state without
 * advancing it (the probe rollouts of the robust inner loop); step()
 * advances. Both may consume randomness from the caller's stream, so a
 * fixed seed fixes the whole interaction.
 */
class Environment {
 public:
  virtual ~Environment() = default;

  struct Step {
    std::vector<double> y;
    double cost = 0.0;
    bool terminal = false;
  };

  virtual int state_dim() const = 0;
  virtual int action_count() const = 0;
  virtual std::vector<double> reset(Rng& rng) = 0;
  virtual const std::vector<double>& state() const = 0;
  virtual Step peek(int action, Rng& rng) const = 0;
  virtual Step step(int action, Rng& rng) = 0;
};

// Pole balancing with the physical step cost. Dynamics are
// deterministic, so peek() never consumes randomness here.
class CartPoleEnv final : public Environment {
 public:
  explicit CartPoleEnv(const CartPoleParams& params) : params_(params) { params_.validate(); }

  int state_dim() const override { return 4; }
  int action_count() const override { return 2; }
  std::vector<double> reset(Rng& rng) override;
  const std::vector<double>& state() const override { return st_.s; }
  Step peek(int action, Rng& rng) const override;
  Step step(int action, Rng& rng) override;

  const CartPoleParams& params() const { return params_; }

 private:
  CartPoleParams params_;
  EnvState st_;
};

/**
 * Finite MDP sampler with one-hot observations, bridging the learning
 * loop to the exact solver tier. Episodes never terminate on their own;
 * resets land on a uniformly random state.
 */
class FiniteMDPEnv final : public Environment {
 public:
  explicit FiniteMDPEnv(FiniteMDP mdp);

  int state_dim() const override { return mdp_.state_count(); }
  int action_count() const override;
  std::vector<double> reset(Rng& rng) override;
  const std::vector<double>& state() const override { return obs_; }
  Step peek(int action, Rng& rng) const override;
  Step step(int action, Rng& rng) override;

  int state_index() const { return idx_; }
  const FiniteMDP& mdp() const { return mdp_; }

 private:
  std::vector<double> one_hot(int idx) const;
  FiniteMDP mdp_;
  int idx_ = 0;
  std::vector<double> obs_;
};

}  // namespace wrl
