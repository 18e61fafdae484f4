#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wrl/cartpole.hpp"
#include "wrl/environment.hpp"
#include "wrl/net.hpp"
#include "wrl/perturb.hpp"

namespace wrl {

/**
 * Configuration shared by the robust trainer and the classical
 * advantage actor-critic baseline. The four rates live on separate time
 * scales; validate() enforces positivity and warnings() flags a rate
 * stack that is not ordered fast to slow (beta1 > beta2 > beta3 >
 * beta4), which the convergence argument assumes but the math does not
 * strictly require for a finite run.
 */
struct TrainConfig {
  double gamma = 0.99;
  double delta = 3.0;      // transport budget
  double order_p = 2.0;
  int m = 1;               // actions sampled per visited state
  int n = 1;               // probe rollouts per sampled action
  double beta1 = 0.05;     // inner ascent rate (z)
  double beta2 = 0.01;     // penalty rate (lambda)
  double beta3 = 0.005;    // critic rate
  double beta4 = 0.001;    // actor rate
  double lambda_init = 5.0;
  // Carry one penalty across the whole run, moving it down the dual
  // slack delta - mean(kappa) each non-terminal probe so it settles near
  // the per-visit argmin. Off: every probe restarts at lambda_init and
  // takes the single printed update, which leaves the slack term
  // gamma * lambda_init * delta in every error.
  bool lambda_carry = true;
  int z_steps = 20;
  long total_steps = 100000;
  std::uint64_t seed = 0;
  bool robust = true;          // robust trainer vs classical baseline
  // On: terminal landings are left unperturbed (lambda = 0, z = y) and the
  // bootstrap is cut, so episode ends anchor the critic at bare cost in
  // both trainers. Off: terminal landings are treated like any other.
  bool terminal_rule = true;
  bool closed_form = false;    // direct perturbation map instead of ascent
  bool paper_sign = false;
  std::vector<double> z_init_offset;  // empty: ascent starts at y
  std::optional<std::pair<std::vector<double>, std::vector<double>>> z_clip;
  std::vector<int> hidden_sizes = {64, 64};
  long log_interval = 1000;

  void validate(int state_dim) const;
  std::vector<std::string> warnings() const;
  PerturbationConfig perturbation() const;
};

// One logging row. Episode return is the survived-step count of the most
// recently completed episode (0 until one completes).
struct TrainRecord {
  long step = 0;
  double episode_return = 0.0;
  double mean_e = 0.0;
  double lambda = 0.0;
  double mean_kappa = 0.0;
  double critic_loss = 0.0;  // 0.5 * mean_e^2
};

struct TrainResult {
  DenseNet actor;
  DenseNet critic;
  std::vector<TrainRecord> log;
  long episodes = 0;       // completed during training
  long steps = 0;          // environment steps actually taken
};

// Raised when a step produces a non-finite error or penalty. Carries the
// diagnostic record alongside the formatted message.
class TrainDivergence : public std::runtime_error {
 public:
  TrainDivergence(std::string msg, long step, double lambda, double e, double z_dist)
      : std::runtime_error(std::move(msg)), step(step), lambda(lambda), e(e), z_dist(z_dist) {}
  long step;
  double lambda;
  double e;
  double z_dist;  // largest ||z - y|| in the offending batch
};

/**
 * Start point for the inner maximization of one quadruple. Non-terminal:
 * z0 = y + delta * offset and lambda0 = config.lambda_init; terminal:
 * z0 = y and lambda0 = 0, freezing the perturbation where bootstrapping
 * stops mattering.
 */
std::pair<std::vector<double>, double> z_initializer(std::span<const double> y, bool terminal,
                                                     const TrainConfig& config, double delta);

// Read-only observer invoked every checkpoint_interval steps (never at
// step 0; the final state is the caller's to save). Must not touch the
// RNG or the environment.
struct TrainHooks {
  long checkpoint_interval = 0;  // 0: never called
  std::function<void(long step, const DenseNet& actor, const DenseNet& critic)> snapshot;
};

/**
 * One learning run against an environment, honoring config.robust.
 *
 * Per step: sample m actions from the actor, collect n probe rollouts
 * per action without advancing the environment, reduce each action's
 * batch to an error e_i and critic gradient g_i (robust perturbation or
 * classical temporal difference), then
 *
 *   w     <- w - beta3 * mean(e) * mean(g)
 *   theta <- theta - beta4 * (1/m) * sum_i e_i * grad log pi(a_i | x)
 *
 * and finally act once with a fresh sample from the updated actor,
 * resetting the environment when the step terminates.
 *
 * Everything is driven by one stream seeded with config.seed, in a fixed
 * draw order: critic init, actor init, initial reset; then per step the
 * m action draws, the peek draws of each probe batch, one acting draw,
 * and the reset draws of a terminal step. The classical baseline draws
 * in exactly the same order, so paired runs share their sample paths.
 *
 * The robust reducer is fed a penalty per probe: the run-level carried
 * value under lambda_carry (descended toward the dual argmin after each
 * non-terminal probe, floored at zero), or a fresh lambda_init when the
 * carry is off. Probes whose quadruple batch touches a terminal landing
 * leave the carried value alone; with the terminal rule on such a batch
 * is reduced with the classical cut error c - u(x) instead, anchoring
 * the critic at bare cost where an episode ends.
 *
 * With delta = 0, the terminal rule on, and z pinned at y (no offset,
 * zero ascent steps) the robust error reduces to the temporal-difference
 * error exactly, and the two trainers produce bit-identical parameter
 * trajectories under a shared seed.
 *
 * Non-finite e or lambda raises TrainDivergence with (step, lambda, e,
 * ||z - y||) in the record.
 */
TrainResult train_loop(const TrainConfig& config, Environment& env);
TrainResult train_loop(const TrainConfig& config, Environment& env, const TrainHooks& hooks);

// Convenience entry points that force the robust flag and build a fresh
// CartPoleEnv from env_params.
TrainResult wraac_train(const TrainConfig& config, const CartPoleParams& env_params);
TrainResult a2c_train(const TrainConfig& config, const CartPoleParams& env_params);

// Same, against a caller-owned environment (used by the finite-MDP
// bridge tests).
TrainResult wraac_train(const TrainConfig& config, Environment& env);
TrainResult a2c_train(const TrainConfig& config, Environment& env);

}  // namespace wrl
