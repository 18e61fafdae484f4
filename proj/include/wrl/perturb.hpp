#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wrl/net.hpp"

namespace wrl {

/**
 * Read-only view of a critic: scalar value plus gradients with respect to
 * the input point and to the critic's own parameters. The perturbation
 * step is written against this interface so tests can drive it with
 * closed-form fields.
 */
class CriticEval {
 public:
  virtual ~CriticEval() = default;
  virtual double value(std::span<const double> z) const = 0;
  virtual std::vector<double> grad_input(std::span<const double> z) const = 0;
  virtual std::vector<double> grad_params(std::span<const double> z) const = 0;
  virtual int param_count() const = 0;
};

// DenseNet-backed critic.
class NetCritic final : public CriticEval {
 public:
  explicit NetCritic(const DenseNet& net) : net_(net) {}
  double value(std::span<const double> z) const override { return net_.critic_forward(z); }
  std::vector<double> grad_input(std::span<const double> z) const override {
    return net_.critic_grad_input(z);
  }
  std::vector<double> grad_params(std::span<const double> z) const override {
    return net_.critic_grad_params(z);
  }
  int param_count() const override { return net_.param_count(); }

 private:
  const DenseNet& net_;
};

// One observed quadruple plus the terminal flag of the landing state.
struct Transition {
  std::vector<double> x;
  int action = 0;
  double cost = 0.0;
  std::vector<double> y;
  bool terminal = false;
};

struct PerturbationConfig {
  double delta = 3.0;
  double order_p = 2.0;
  double lambda_init = 5.0;
  int z_steps = 20;
  double beta1 = 0.05;  // z ascent rate
  double beta2 = 0.01;  // penalty update rate
  bool closed_form = false;  // use the direct map instead of ascent (order_p > 1 only)
  bool paper_sign = false;   // reproduce the printed sign of the direct map
  // Empty: ascent starts at y. Otherwise the start is y + delta * offset
  // (the offset is a direction in state space, scaled by the budget).
  std::vector<double> z_init_offset;
  // Optional componentwise clamp applied after every ascent step.
  std::optional<std::pair<std::vector<double>, std::vector<double>>> z_clip;

  void validate(int state_dim) const;
  // Non-fatal advice, e.g. lambda_init at or below (p*delta)^(-1/p).
  std::vector<std::string> warnings() const;

  // Ascent start for a landing state y (terminal handling is the
  // caller's concern). Mirrors the trainer's initializer.
  std::vector<double> z_start(std::span<const double> y) const;
};

struct PerturbationResult {
  double e = 0.0;                            // mean robust temporal error
  std::vector<double> g_e;                   // d e / d critic parameters
  double lambda = 0.0;                       // penalty after the single update
  std::vector<std::vector<double>> z_list;   // perturbed state per quadruple
  double kappa_mean = 0.0;                   // mean transport use
};

/**
 * Ascent direction of z -> u(z) - lambda * ||z - y||^p / p:
 *
 *   grad_u_at_z - lambda * ||z - y||^(p-2) * (z - y).
 *
 * At z = y the penalty term vanishes for every order (subgradient zero),
 * so the function returns grad_u_at_z unchanged.
 */
std::vector<double> grad_z(std::span<const double> z, std::span<const double> y,
                           double lambda, double order_p,
                           std::span<const double> grad_u_at_z);

// Fixed-step ascent from the configured start (z_steps = 0 returns the
// start unchanged; with no offset that is y itself). Clamps to z_clip
// after every step when set, and fails hard on non-finite critic output,
// naming the offending input.
std::vector<double> ascend_z(std::span<const double> y, double lambda,
                             const PerturbationConfig& cfg, const CriticEval& critic);

// Same, but from an explicit start point.
std::vector<double> ascend_z_from(std::span<const double> z0, std::span<const double> y,
                                  double lambda, const PerturbationConfig& cfg,
                                  const CriticEval& critic);

/**
 * Direct perturbation map for order_p > 1 and lambda > 0:
 *
 *   z = y + lambda^(-1/(p-1)) * ||g||^(-(p-2)/(p-1)) * g,   g = grad_u_at_y.
 *
 * The plus sign is the ascent-consistent first-order condition of the
 * inner maximization; paper_sign = true flips it to the printed form.
 * A zero gradient maps to y itself. For p = 2 this is y + g / lambda.
 */
std::vector<double> closed_form_z(std::span<const double> y, double lambda, double order_p,
                                  std::span<const double> grad_u_at_y,
                                  bool paper_sign = false);

// delta - mean(kappa_values); positive when transport is under budget
// (the penalty then grows under the printed update), negative when over.
double lambda_gradient(std::span<const double> kappa_values, double delta);

/**
 * Process n rollouts that share the same (x, action):
 * per quadruple, find the perturbed state (ascent or direct map), then
 * accumulate
 *
 *   e   += c + gamma * (lambda*delta + u(z) - lambda*kappa(z,y)) - u(x)
 *   g_e += gamma * du/dw(z) - du/dw(x)
 *
 * divide both by n, and finish with the single penalty update
 * lambda <- max(0, lambda + beta2 * (delta - mean kappa)). Terminal
 * quadruples are processed with the penalty forced to zero and z = y.
 * Mixed (x, action) pairs or an empty batch are usage errors.
 */
PerturbationResult perturb_rollouts(std::span<const Transition> quadruples, double lambda,
                                    const PerturbationConfig& cfg, const CriticEval& critic,
                                    double gamma);

}  // namespace wrl
