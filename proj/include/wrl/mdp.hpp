#pragma once

#include <span>
#include <vector>

namespace wrl {

/**
 * Finite-state MDP over a one-dimensional state embedding.
 *
 * States are identified with strictly increasing real embeddings; the
 * transport ground cost between two states is a function of the distance
 * between their embeddings. Costs are bounded in [0, c_bar], so every
 * admissible value table lives in [0, c_bar / (1 - gamma)].
 *
 * transition[x][a] is a probability row over the full state set,
 * cost[x][a] the immediate cost. Action counts may differ per state.
 */
struct FiniteMDP {
  std::vector<double> states;  // 1-D embeddings, strictly increasing
  std::vector<std::vector<std::vector<double>>> transition;  // [x][a] -> row over states
  std::vector<std::vector<double>> cost;                     // [x][a]
  double gamma = 0.9;
  double c_bar = 1.0;

  int state_count() const { return static_cast<int>(states.size()); }
  int action_count(int x) const { return static_cast<int>(transition[x].size()); }
  double value_upper_bound() const { return c_bar / (1.0 - gamma); }

  // Throws std::invalid_argument with a descriptive message on the first
  // violated invariant (row sums within 1e-12 of one, costs in range,
  // gamma in (0,1), embeddings strictly increasing, shape mismatches).
  void validate() const;
};

/**
 * Order-p transport ball around a reference kernel.
 *
 * delta is the penalized-transport budget; the equivalent metric radius
 * is epsilon = (p * delta)^(1/p), i.e. delta = epsilon^p / p.
 */
struct WassersteinBall {
  double order_p = 1.0;
  double delta = 0.0;

  double epsilon() const;
  void validate() const;  // order_p >= 1, delta >= 0, both finite

  static WassersteinBall from_epsilon(double order_p, double epsilon);
};

// Value table over states; admissible entries lie in [0, c_bar/(1-gamma)].
using ValueTable = std::vector<double>;

// Output of the robust solver.
struct RobustSolution {
  ValueTable value;
  std::vector<int> policy;                        // greedy action per state
  std::vector<std::vector<double>> lambda_star;   // per (x, a)
  int iterations = 0;
  double residual = 0.0;   // last sup-norm change
  bool converged = false;  // false when max_iter hit before tol
};

/**
 * Ground transport cost kappa(z, y) = ||z - y||_2^p / p.
 *
 * Requires order_p >= 1 and matching dimensions; zero displacement costs
 * zero for every order.
 */
double ground_cost(std::span<const double> z, std::span<const double> y, double order_p);

// Scalar specialization used on state embeddings.
double ground_cost_1d(double z, double y, double order_p);

// Throws std::invalid_argument when u's shape or range does not fit mdp.
// A small slack (1e-9 absolute) absorbs float drift from repeated backups.
void validate_value_table(const FiniteMDP& mdp, const ValueTable& u);

}  // namespace wrl
