#include "wrl/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wrl {

namespace {

double point_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Classical temporal-difference reduction of a probe batch, shaped like
// perturb_rollouts so the two trainers share their downstream updates.
// Quadruples arrive with the raw terminal flag. With the terminal rule
// on, a terminal landing cuts the bootstrap: e = c + gamma*u(y)*(1 -
// terminal) - u(x), so episode ends anchor the critic to bare costs.
// With it off the landing value is kept even at episode ends.
PerturbationResult td_rollouts(std::span<const Transition> quadruples, bool terminal_rule,
                               const CriticEval& critic, double gamma) {
  const auto& first = quadruples.front();
  const double n = static_cast<double>(quadruples.size());
  const double ux = critic.value(first.x);
  const std::vector<double> gx = critic.grad_params(first.x);

  PerturbationResult res;
  res.g_e.assign(critic.param_count(), 0.0);
  for (const auto& q : quadruples) {
    const double keep = (q.terminal && terminal_rule) ? 0.0 : 1.0;
    const double uy = critic.value(q.y);
    res.e += q.cost + gamma * (keep * uy) - ux;
    const std::vector<double> gy = critic.grad_params(q.y);
    for (std::size_t i = 0; i < res.g_e.size(); ++i)
      res.g_e[i] += gamma * (keep * gy[i]) - gx[i];
    res.z_list.emplace_back(q.y);
  }
  res.e /= n;
  for (double& g : res.g_e) g /= n;
  return res;
}

}  // namespace

void TrainConfig::validate(int state_dim) const {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("TrainConfig: gamma must lie in (0, 1)");
  if (m < 1 || n < 1) throw std::invalid_argument("TrainConfig: m and n must be >= 1");
  if (!(beta3 > 0.0) || !(beta4 > 0.0))
    throw std::invalid_argument("TrainConfig: beta3 and beta4 must be positive");
  if (total_steps < 0) throw std::invalid_argument("TrainConfig: total_steps must be >= 0");
  if (log_interval < 1) throw std::invalid_argument("TrainConfig: log_interval must be >= 1");
  for (int h : hidden_sizes)
    if (h < 1) throw std::invalid_argument("TrainConfig: hidden layer sizes must be >= 1");
  perturbation().validate(state_dim);
}

std::vector<std::string> TrainConfig::warnings() const {
  std::vector<std::string> out = perturbation().warnings();
  if (!(beta1 > beta2 && beta2 > beta3 && beta3 > beta4))
    out.push_back(
        "learning rates are not ordered fast to slow (beta1 > beta2 > beta3 > beta4); "
        "the multi-time-scale argument assumes that separation");
  return out;
}

PerturbationConfig TrainConfig::perturbation() const {
  PerturbationConfig p;
  p.delta = delta;
  p.order_p = order_p;
  p.lambda_init = lambda_init;
  p.z_steps = z_steps;
  p.beta1 = beta1;
  p.beta2 = beta2;
  p.closed_form = closed_form;
  p.paper_sign = paper_sign;
  p.z_init_offset = z_init_offset;
  p.z_clip = z_clip;
  return p;
}

std::pair<std::vector<double>, double> z_initializer(std::span<const double> y, bool terminal,
                                                     const TrainConfig& config, double delta) {
  std::vector<double> z(y.begin(), y.end());
  if (terminal) return {std::move(z), 0.0};
  if (!config.z_init_offset.empty()) {
    if (config.z_init_offset.size() != y.size())
      throw std::invalid_argument("z_initializer: offset dimension mismatch");
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += delta * config.z_init_offset[i];
  }
  return {std::move(z), config.lambda_init};
}

TrainResult train_loop(const TrainConfig& config, Environment& env) {
  return train_loop(config, env, TrainHooks{});
}

TrainResult train_loop(const TrainConfig& config, Environment& env, const TrainHooks& hooks) {
  const int state_dim = env.state_dim();
  const int actions = env.action_count();
  config.validate(state_dim);
  const PerturbationConfig pcfg = config.perturbation();

  Rng rng(config.seed);
  std::vector<int> critic_sizes{state_dim};
  std::vector<int> actor_sizes{state_dim};
  for (int h : config.hidden_sizes) {
    critic_sizes.push_back(h);
    actor_sizes.push_back(h);
  }
  critic_sizes.push_back(1);
  actor_sizes.push_back(actions);

  // Draw order: critic parameters, then actor parameters, then the reset.
  DenseNet critic(critic_sizes, OutputHead::Linear, rng);
  DenseNet actor(actor_sizes, OutputHead::Softmax, rng);
  const NetCritic critic_view(critic);

  std::vector<TrainRecord> log;
  long episodes = 0;
  long steps_taken = 0;

  env.reset(rng);
  long episode_steps = 0;
  double last_return = 0.0;

  std::vector<int> sampled(config.m);
  std::vector<double> e_list(config.m);
  std::vector<double> g_mean(critic.param_count());
  std::vector<double> actor_grad(actor.param_count());
  std::vector<Transition> quads;
  double lambda_run = config.lambda_init;

  for (long step = 0; step < config.total_steps; ++step) {
    const std::vector<double> x = env.state();
    const std::vector<double> pi = actor.policy_forward(x);
    for (int i = 0; i < config.m; ++i) sampled[i] = rng.categorical(pi);

    std::fill(g_mean.begin(), g_mean.end(), 0.0);
    double e_sum = 0.0, lambda_sum = 0.0, kappa_sum = 0.0, z_dist_max = 0.0;
    for (int i = 0; i < config.m; ++i) {
      quads.clear();
      bool ended = false;
      for (int j = 0; j < config.n; ++j) {
        Environment::Step probe = env.peek(sampled[i], rng);
        ended = ended || probe.terminal;
        // The robust reducer pins terminal quadruples unconditionally, so
        // the terminal rule is applied here: with the rule off a terminal
        // landing is perturbed like any other. The classical reducer gets
        // the raw flag and applies the rule itself.
        const bool flag =
            config.robust ? (config.terminal_rule && probe.terminal) : probe.terminal;
        quads.push_back(
            Transition{x, sampled[i], probe.cost, std::move(probe.y), flag});
      }
      const double lam_in = config.lambda_carry ? lambda_run : config.lambda_init;
      // Episode ends under the rule take the classical cut in both
      // trainers. Bootstrapping through a dead landing leaves the critic
      // a cost-free fixed point near sup(cost)/(1 - gamma) financed by
      // the ascent premium; anchoring ends at bare cost removes it and
      // keeps the delta = 0 trajectories of the two trainers identical.
      const bool cut = config.terminal_rule && ended;
      PerturbationResult r =
          config.robust && !cut
              ? perturb_rollouts(quads, lam_in, pcfg, critic_view, config.gamma)
              : td_rollouts(quads, config.terminal_rule, critic_view, config.gamma);
      for (std::size_t k = 0; k < quads.size(); ++k)
        z_dist_max = std::max(z_dist_max, point_distance(r.z_list[k], quads[k].y));
      if (!std::isfinite(r.e) || !std::isfinite(r.lambda)) {
        std::ostringstream os;
        os << "training diverged at step " << step << ": lambda = " << r.lambda
           << ", e = " << r.e << ", max ||z - y|| = " << z_dist_max;
        throw TrainDivergence(os.str(), step, r.lambda, r.e, z_dist_max);
      }
      if (config.robust && config.lambda_carry) {
        // Descend the convex dual in lambda (its slope is the budget
        // slack delta - mean(kappa)), so the carried penalty tracks the
        // argmin instead of climbing away from it like the one-shot
        // printed update. Pinned terminal batches carry no slack signal.
        const bool pinned = std::any_of(quads.begin(), quads.end(),
                                        [](const Transition& q) { return q.terminal; });
        if (!pinned)
          lambda_run =
              std::max(0.0, lambda_run - config.beta2 * (config.delta - r.kappa_mean));
      }
      e_list[i] = r.e;
      e_sum += r.e;
      lambda_sum += r.lambda;
      kappa_sum += r.kappa_mean;
      for (std::size_t k = 0; k < g_mean.size(); ++k) g_mean[k] += r.g_e[k];
    }
    const double minv = 1.0 / static_cast<double>(config.m);
    const double e_mean = e_sum * minv;
    for (double& g : g_mean) g *= minv;

    // w <- w - beta3 * mean(e) * mean(g_e)
    std::vector<double> critic_grad(g_mean);
    for (double& g : critic_grad) g *= e_mean;
    sgd_step_inplace(critic, critic_grad, config.beta3);

    // theta <- theta - beta4 * (1/m) sum_i e_i * grad log pi(a_i | x)
    std::fill(actor_grad.begin(), actor_grad.end(), 0.0);
    for (int i = 0; i < config.m; ++i) {
      const std::vector<double> lg = actor.policy_log_grad(x, sampled[i]);
      for (std::size_t k = 0; k < actor_grad.size(); ++k)
        actor_grad[k] += e_list[i] * lg[k];
    }
    for (double& g : actor_grad) g *= minv;
    sgd_step_inplace(actor, actor_grad, config.beta4);

    const int act = rng.categorical(actor.policy_forward(x));
    Environment::Step taken = env.step(act, rng);
    ++episode_steps;
    ++steps_taken;
    if (taken.terminal) {
      last_return = static_cast<double>(episode_steps);
      ++episodes;
      episode_steps = 0;
      env.reset(rng);
    }

    if ((step + 1) % config.log_interval == 0 || step + 1 == config.total_steps) {
      TrainRecord rec;
      rec.step = step + 1;
      rec.episode_return = last_return;
      rec.mean_e = e_mean;
      rec.lambda = config.robust && config.lambda_carry ? lambda_run : lambda_sum * minv;
      rec.mean_kappa = kappa_sum * minv;
      rec.critic_loss = 0.5 * e_mean * e_mean;
      log.push_back(rec);
    }
    if (hooks.snapshot && hooks.checkpoint_interval > 0 &&
        (step + 1) % hooks.checkpoint_interval == 0 && step + 1 != config.total_steps)
      hooks.snapshot(step + 1, actor, critic);
  }
  return TrainResult{std::move(actor), std::move(critic), std::move(log), episodes, steps_taken};
}

TrainResult wraac_train(const TrainConfig& config, Environment& env) {
  TrainConfig c = config;
  c.robust = true;
  return train_loop(c, env);
}

TrainResult a2c_train(const TrainConfig& config, Environment& env) {
  TrainConfig c = config;
  c.robust = false;
  return train_loop(c, env);
}

TrainResult wraac_train(const TrainConfig& config, const CartPoleParams& env_params) {
  CartPoleEnv env(env_params);
  return wraac_train(config, env);
}

TrainResult a2c_train(const TrainConfig& config, const CartPoleParams& env_params) {
  CartPoleEnv env(env_params);
  return a2c_train(config, env);
}

}  // namespace wrl
