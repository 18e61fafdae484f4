#include "wrl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wrl/cartpole.hpp"
#include "wrl/io.hpp"
#include "wrl/mdp.hpp"
#include "wrl/net.hpp"
#include "wrl/perturb.hpp"
#include "wrl/robust_bellman.hpp"
#include "wrl/train.hpp"

namespace wrl {

namespace {

FiniteMDP random_mdp(Rng& rng, int max_states) {
  FiniteMDP mdp;
  const int n = 2 + static_cast<int>(rng.below(max_states - 1));
  double pos = rng.uniform(-1.0, 0.0);
  for (int i = 0; i < n; ++i) {
    mdp.states.push_back(pos);
    pos += rng.uniform(0.2, 1.0);
  }
  mdp.gamma = 0.9;
  mdp.c_bar = 1.0;
  mdp.transition.resize(n);
  mdp.cost.resize(n);
  for (int x = 0; x < n; ++x) {
    const int actions = 1 + static_cast<int>(rng.below(2));
    for (int a = 0; a < actions; ++a) {
      std::vector<double> row(n);
      double sum = 0.0;
      for (double& p : row) {
        p = rng.uniform(0.05, 1.0);
        sum += p;
      }
      for (double& p : row) p /= sum;
      mdp.transition[x].push_back(std::move(row));
      mdp.cost[x].push_back(rng.uniform(0.0, 1.0));
    }
  }
  mdp.validate();
  return mdp;
}

ValueTable random_value_table(Rng& rng, const FiniteMDP& mdp, double hi) {
  ValueTable u(mdp.state_count());
  for (double& v : u) v = rng.uniform(0.0, hi);
  return u;
}

// Straightforward non-robust value iteration, kept separate from the
// solver on purpose: it is the reduction oracle.
ValueTable classical_value_iteration(const FiniteMDP& mdp, double tol, int max_iter) {
  const int n = mdp.state_count();
  ValueTable u(n, 0.0);
  for (int it = 0; it < max_iter; ++it) {
    ValueTable next(n, 0.0);
    for (int x = 0; x < n; ++x) {
      double best = 0.0;
      for (int a = 0; a < mdp.action_count(x); ++a) {
        double q = mdp.cost[x][a];
        for (int y = 0; y < n; ++y) q += mdp.gamma * mdp.transition[x][a][y] * u[y];
        if (a == 0 || q < best) best = q;
      }
      next[x] = best;
    }
    double res = 0.0;
    for (int x = 0; x < n; ++x) res = std::max(res, std::abs(next[x] - u[x]));
    u = std::move(next);
    if (res <= tol) break;
  }
  return u;
}

double sup_dist(const ValueTable& a, const ValueTable& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

std::string num(double v) { return format_double(v); }

// u(z) = g . z - 0.5 * eta * ||z - center||^2, parameter-free.
class QuadraticCritic final : public CriticEval {
 public:
  QuadraticCritic(std::vector<double> g, std::vector<double> center, double eta)
      : g_(std::move(g)), center_(std::move(center)), eta_(eta) {}
  double value(std::span<const double> z) const override {
    double v = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      v += g_[i] * z[i];
      const double d = z[i] - center_[i];
      v -= 0.5 * eta_ * d * d;
    }
    return v;
  }
  std::vector<double> grad_input(std::span<const double> z) const override {
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = g_[i] - eta_ * (z[i] - center_[i]);
    return out;
  }
  std::vector<double> grad_params(std::span<const double>) const override { return {}; }
  int param_count() const override { return 0; }

 private:
  std::vector<double> g_, center_;
  double eta_;
};

VerifyCheck check_dual_example() {
  FiniteMDP mdp;
  mdp.states = {0.0, 1.0};
  mdp.gamma = 0.9;
  mdp.c_bar = 1.0;
  mdp.transition = {{{1.0, 0.0}}, {{1.0, 0.0}}};
  mdp.cost = {{0.0}, {0.0}};
  const WassersteinBall ball{1.0, 0.5};
  const ValueTable u{0.0, 1.0};
  const DualBackup b = robust_q_backup(mdp, ball, u, 0, 0);
  const bool pass = std::abs(b.value - 0.45) <= 1e-12 && std::abs(b.lambda_star - 1.0) <= 1e-12;
  return {"dual-backup-example", pass,
          "value " + num(b.value) + " (want 0.45), lambda " + num(b.lambda_star) + " (want 1)"};
}

VerifyCheck check_duality_gap() {
  Rng rng(11);
  double worst_low = 0.0, worst_high = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const FiniteMDP mdp = random_mdp(rng, 3);
    const double p = rng.below(2) == 0 ? 1.0 : 2.0;
    const WassersteinBall ball{p, rng.uniform(0.0, 1.0)};
    // Small value range keeps the grid oracle's resolution error under
    // the gate; the ordering is checked at every scale elsewhere.
    const ValueTable u = random_value_table(rng, mdp, 0.02);
    for (int x = 0; x < mdp.state_count(); ++x) {
      for (int a = 0; a < mdp.action_count(x); ++a) {
        const double dual = robust_q_backup(mdp, ball, u, x, a).value;
        const double primal = primal_backup_oracle(mdp, ball, u, x, a, 40);
        const double gap = dual - primal;
        worst_low = std::min(worst_low, gap);
        worst_high = std::max(worst_high, gap);
      }
    }
  }
  const bool pass = worst_low >= -1e-12 && worst_high <= 1e-3;
  return {"duality-gap", pass,
          "gap range [" + num(worst_low) + ", " + num(worst_high) + "], want [0, 1e-3]"};
}

VerifyCheck check_operator_laws() {
  Rng rng(12);
  double worst_contract = 0.0, worst_mono = 0.0, worst_shift = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const FiniteMDP mdp = random_mdp(rng, 4);
    const WassersteinBall ball{rng.below(2) == 0 ? 1.0 : 2.0, rng.uniform(0.0, 1.0)};
    const double ub = mdp.value_upper_bound();
    const ValueTable u1 = random_value_table(rng, mdp, ub);
    ValueTable u2 = random_value_table(rng, mdp, ub);
    const ValueTable h1 = robust_bellman_operator(mdp, ball, u1);
    const ValueTable h2 = robust_bellman_operator(mdp, ball, u2);
    worst_contract = std::max(worst_contract, sup_dist(h1, h2) - mdp.gamma * sup_dist(u1, u2));

    // Componentwise max makes an ordered pair for the monotonicity law.
    ValueTable hi = u1;
    for (std::size_t i = 0; i < hi.size(); ++i) hi[i] = std::max(hi[i], u2[i]);
    const ValueTable h_hi = robust_bellman_operator(mdp, ball, hi);
    for (std::size_t i = 0; i < hi.size(); ++i)
      worst_mono = std::max(worst_mono, h1[i] - h_hi[i]);

    ValueTable shifted = u1;
    const double c = rng.uniform(0.0, ub - *std::max_element(u1.begin(), u1.end()));
    for (double& v : shifted) v += c;
    const ValueTable h_shift = robust_bellman_operator(mdp, ball, shifted);
    for (std::size_t i = 0; i < shifted.size(); ++i)
      worst_shift = std::max(worst_shift, std::abs(h_shift[i] - (h1[i] + mdp.gamma * c)));
  }
  const bool pass = worst_contract <= 1e-9 && worst_mono <= 1e-9 && worst_shift <= 1e-9;
  return {"operator-laws", pass,
          "contraction excess " + num(worst_contract) + ", monotonicity violation " +
              num(worst_mono) + ", shift error " + num(worst_shift) + ", want all <= 1e-9"};
}

VerifyCheck check_classical_reduction() {
  Rng rng(13);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const FiniteMDP mdp = random_mdp(rng, 4);
    const WassersteinBall ball{2.0, 0.0};
    const RobustSolution sol = solve_value_iteration(mdp, ball, {1e-10, 100000});
    const ValueTable ref = classical_value_iteration(mdp, 1e-12, 200000);
    worst = std::max(worst, sup_dist(sol.value, ref));
  }
  return {"classical-reduction", worst <= 1e-6,
          "max distance to the plain solver " + num(worst) + ", want <= 1e-6"};
}

VerifyCheck check_critic_gradients(bool corrupt) {
  Rng rng(14);
  double worst = 0.0;
  for (int trial = 0; trial < 4; ++trial) {
    DenseNet net({3, 6, 5, 1}, OutputHead::Linear, rng);
    std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::vector<double> ag = net.critic_grad_params(x);
    if (corrupt && trial == 0) ag[0] += 0.01;
    std::vector<double> params = net.params();
    const double h = 1e-5;
    for (std::size_t k = 0; k < params.size(); ++k) {
      std::vector<double> plus = params, minus = params;
      plus[k] += h;
      minus[k] -= h;
      DenseNet probe = net;
      probe.set_params(plus);
      const double up = probe.critic_forward(x);
      probe.set_params(minus);
      const double um = probe.critic_forward(x);
      const double fd = (up - um) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(ag[k]), 1e-6});
      worst = std::max(worst, std::abs(fd - ag[k]) / denom);
    }
    const std::vector<double> gi = net.critic_grad_input(x);
    for (std::size_t k = 0; k < x.size(); ++k) {
      std::vector<double> plus(x), minus(x);
      plus[k] += h;
      minus[k] -= h;
      const double fd = (net.critic_forward(plus) - net.critic_forward(minus)) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(gi[k]), 1e-6});
      worst = std::max(worst, std::abs(fd - gi[k]) / denom);
    }
  }
  return {"critic-gradients", worst <= 1e-4,
          "max relative error " + num(worst) + ", want <= 1e-4"};
}

VerifyCheck check_policy_gradients() {
  Rng rng(15);
  double worst = 0.0, worst_mean = 0.0;
  for (int trial = 0; trial < 4; ++trial) {
    DenseNet net({3, 6, 3}, OutputHead::Softmax, rng);
    std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const int a = static_cast<int>(rng.below(3));
    const std::vector<double> ag = net.policy_log_grad(x, a);
    std::vector<double> params = net.params();
    const double h = 1e-5;
    for (std::size_t k = 0; k < params.size(); ++k) {
      std::vector<double> plus = params, minus = params;
      plus[k] += h;
      minus[k] -= h;
      DenseNet probe = net;
      probe.set_params(plus);
      const double lp = std::log(probe.policy_forward(x)[a]);
      probe.set_params(minus);
      const double lm = std::log(probe.policy_forward(x)[a]);
      const double fd = (lp - lm) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(ag[k]), 1e-6});
      worst = std::max(worst, std::abs(fd - ag[k]) / denom);
    }
    // sum_a pi(a) grad log pi(a) = 0
    const std::vector<double> pi = net.policy_forward(x);
    std::vector<double> mean(params.size(), 0.0);
    for (int b = 0; b < 3; ++b) {
      const std::vector<double> g = net.policy_log_grad(x, b);
      for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += pi[b] * g[k];
    }
    for (double v : mean) worst_mean = std::max(worst_mean, std::abs(v));
  }
  const bool pass = worst <= 1e-4 && worst_mean <= 1e-8;
  return {"policy-gradients", pass,
          "max relative error " + num(worst) + " (want <= 1e-4), score mean " + num(worst_mean) +
              " (want <= 1e-8)"};
}

VerifyCheck check_perturbation_arithmetic() {
  Rng rng(16);
  DenseNet net({2, 4, 1}, OutputHead::Linear, rng);
  const NetCritic critic(net);

  PerturbationConfig cfg;
  cfg.delta = 0.5;
  cfg.order_p = 2.0;
  cfg.lambda_init = 1.3;
  cfg.z_steps = 0;  // start point is the final z, so the sums are closed-form
  cfg.beta2 = 0.05;
  cfg.z_init_offset = {0.01, -0.02};

  const std::vector<double> x{0.1, 0.2};
  std::vector<Transition> quads;
  quads.push_back({x, 0, 0.4, {0.3, 0.1}, false});
  quads.push_back({x, 0, 0.7, {0.0, 0.4}, true});
  const double gamma = 0.9;
  const double lambda = 1.3;
  const PerturbationResult got = perturb_rollouts(quads, lambda, cfg, critic, gamma);

  // Independent accumulation, restating the update rules directly.
  double e = 0.0, kap_sum = 0.0;
  std::vector<double> g(net.param_count(), 0.0);
  const double ux = net.critic_forward(x);
  const std::vector<double> gx = net.critic_grad_params(x);
  for (const Transition& q : quads) {
    std::vector<double> z(q.y);
    double lam = lambda;
    if (q.terminal) {
      lam = 0.0;
    } else {
      for (std::size_t i = 0; i < z.size(); ++i) z[i] += cfg.delta * cfg.z_init_offset[i];
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) sq += (z[i] - q.y[i]) * (z[i] - q.y[i]);
    const double kap = sq / 2.0;
    e += q.cost + gamma * (lam * cfg.delta + net.critic_forward(z) - lam * kap) - ux;
    const std::vector<double> gz = net.critic_grad_params(z);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gamma * gz[i] - gx[i];
    kap_sum += kap;
  }
  e /= 2.0;
  for (double& v : g) v /= 2.0;
  const double lam_next = std::max(0.0, lambda + cfg.beta2 * (cfg.delta - kap_sum / 2.0));

  double g_err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) g_err = std::max(g_err, std::abs(g[i] - got.g_e[i]));
  const double e_err = std::abs(e - got.e);
  const double l_err = std::abs(lam_next - got.lambda);
  const bool pass = e_err <= 1e-14 && g_err <= 1e-14 && l_err <= 1e-14 &&
                    std::abs(got.kappa_mean - kap_sum / 2.0) <= 1e-14;
  return {"perturbation-arithmetic", pass,
          "e error " + num(e_err) + ", gradient error " + num(g_err) + ", penalty error " +
              num(l_err) + ", want all <= 1e-14"};
}

VerifyCheck check_direct_map_agreement() {
  const QuadraticCritic critic({0.8, -0.5}, {0.0, 0.0}, 0.001);
  const std::vector<double> y{0.4, -0.2};
  const double lambda = 2.0;
  PerturbationConfig cfg;
  cfg.delta = 1.0;
  cfg.order_p = 2.0;
  cfg.z_steps = 4000;
  cfg.beta1 = 0.02;
  const std::vector<double> z_iter = ascend_z(y, lambda, cfg, critic);
  const std::vector<double> z_map = closed_form_z(y, lambda, 2.0, critic.grad_input(y), false);
  double d = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) d += (z_iter[i] - z_map[i]) * (z_iter[i] - z_map[i]);
  d = std::sqrt(d);
  return {"direct-map-agreement", d <= 1e-3,
          "ascent vs direct map distance " + num(d) + ", want <= 1e-3"};
}

VerifyCheck check_cart_trace() {
  CartPoleParams params;
  EnvState s;
  const auto [next, cost] = cartpole_step(s, 1, params);
  const std::vector<double> want{0.0, 0.19512, 0.0, -0.29268};
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(next.s[i] - want[i]));
  const bool pass = worst <= 1e-4 && cost == 0.0 && !next.done;
  return {"cart-step-trace", pass, "max coordinate error " + num(worst) + ", want <= 1e-4"};
}

VerifyCheck check_train_determinism() {
  TrainConfig cfg;
  cfg.total_steps = 200;
  cfg.hidden_sizes = {8};
  cfg.seed = 7;
  cfg.log_interval = 50;
  cfg.z_init_offset = {0.0, 1.0 / std::sqrt(26.0), 0.0, 5.0 / std::sqrt(26.0)};
  const CartPoleParams params;
  const TrainResult a = wraac_train(cfg, params);
  const TrainResult b = wraac_train(cfg, params);
  const bool same_params = a.critic.params() == b.critic.params() &&
                           a.actor.params() == b.actor.params();
  bool same_log = a.log.size() == b.log.size();
  for (std::size_t i = 0; same_log && i < a.log.size(); ++i)
    same_log = a.log[i].step == b.log[i].step && a.log[i].mean_e == b.log[i].mean_e &&
               a.log[i].lambda == b.log[i].lambda;
  const bool pass = same_params && same_log;
  return {"train-determinism", pass,
          std::string("paired seeded runs ") + (pass ? "identical" : "diverged")};
}

}  // namespace

std::vector<VerifyCheck> run_verify(const VerifyOptions& opts) {
  std::vector<VerifyCheck> checks;
  checks.push_back(check_dual_example());
  checks.push_back(check_duality_gap());
  checks.push_back(check_operator_laws());
  checks.push_back(check_classical_reduction());
  checks.push_back(check_critic_gradients(opts.corrupt_gradient));
  checks.push_back(check_policy_gradients());
  checks.push_back(check_perturbation_arithmetic());
  checks.push_back(check_direct_map_agreement());
  checks.push_back(check_cart_trace());
  checks.push_back(check_train_determinism());
  return checks;
}

std::string verify_table(const std::vector<VerifyCheck>& checks) {
  std::size_t width = 4;
  for (const VerifyCheck& c : checks) width = std::max(width, c.name.size());
  std::ostringstream os;
  for (const VerifyCheck& c : checks) {
    os << (c.pass ? "PASS  " : "FAIL  ") << c.name;
    os << std::string(width - c.name.size() + 2, ' ') << c.detail << "\n";
  }
  int passed = 0;
  for (const VerifyCheck& c : checks)
    if (c.pass) ++passed;
  os << passed << "/" << checks.size() << " checks passed\n";
  return os.str();
}

bool verify_passed(const std::vector<VerifyCheck>& checks) {
  for (const VerifyCheck& c : checks)
    if (!c.pass) return false;
  return true;
}

}  // namespace wrl
