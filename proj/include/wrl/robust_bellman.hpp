#pragma once

#include "wrl/mdp.hpp"

namespace wrl {

// Value and minimizing penalty of a distributionally robust backup.
struct DualBackup {
  double value = 0.0;
  double lambda_star = 0.0;
};

/**
 * Penalized robust backup at fixed lambda >= 0:
 *
 *   c(x,a) + gamma * lambda * delta
 *          + gamma * sum_y P(y|x,a) * max_z [ u(z) - lambda * kappa(z, y) ]
 *
 * The inner maximization runs over the finite state set. With delta = 0
 * and lambda -> infinity this collapses to the standard Bellman backup.
 */
double dual_penalized_backup(const FiniteMDP& mdp, const WassersteinBall& ball,
                             const ValueTable& u, int x, int a, double lambda);

/**
 * Exact minimum over lambda >= 0 of the penalized backup.
 *
 * The objective is convex piecewise-linear in lambda: each inner max is a
 * maximum of affine pieces with slopes -kappa(z, y). The minimum is found
 * by enumerating every candidate breakpoint
 *
 *   lambda = (u(z1) - u(z2)) / (kappa(z1, y) - kappa(z2, y)),
 *
 * the intersection of two inner branches, over state triples with
 * distinct ground costs, plus lambda = 0. Beyond
 * the largest breakpoint every inner max sits at z = y, so the tail slope
 * is gamma * delta >= 0 and the enumeration covers the true minimum.
 * Value ties are broken toward the smallest lambda.
 */
DualBackup robust_q_backup(const FiniteMDP& mdp, const WassersteinBall& ball,
                           const ValueTable& u, int x, int a);

/**
 * Brute-force primal evaluation of the same backup:
 *
 *   c(x,a) + gamma * max { sum_z Q(z) u(z) :
 *                          transport_cost(Q, P(.|x,a)) <= delta }
 *
 * enumerating all Q with components k/grid_k on the simplex and scoring
 * feasibility with the exact one-dimensional monotone-coupling transport
 * cost. Deliberately shares no code with the dual path; serves as an
 * independent check of strong duality. Lower-bounds robust_q_backup, and
 * the gap shrinks as grid_k grows (grids are nested when grid_k divides
 * the refinement).
 */
double primal_backup_oracle(const FiniteMDP& mdp, const WassersteinBall& ball,
                            const ValueTable& u, int x, int a, int grid_k);

// One application of the robust Bellman operator: min over actions of
// robust_q_backup. Monotone, gamma-contractive in the sup norm, and
// shifts by gamma * C under u + C; preserves [0, c_bar/(1-gamma)].
ValueTable robust_bellman_operator(const FiniteMDP& mdp, const WassersteinBall& ball,
                                   const ValueTable& u);

// Policy-evaluation variant: expectation of per-action backups under a
// stochastic policy, each action keeping its own minimizing lambda.
// policy[x] must be a probability row over action_count(x) entries.
ValueTable policy_evaluation_operator(const FiniteMDP& mdp, const WassersteinBall& ball,
                                      const ValueTable& u,
                                      const std::vector<std::vector<double>>& policy);

struct SolveOptions {
  double tol = 1e-8;
  int max_iter = 100000;
};

/**
 * Value iteration from u = 0 to the robust fixed point.
 *
 * Stops when the sup-norm change drops to tol or max_iter is reached; a
 * truncated run is reported through RobustSolution::converged rather
 * than silently. The returned policy is greedy (smallest action index on
 * ties) and lambda_star holds the per-(x, a) minimizing penalties at the
 * final table.
 */
RobustSolution solve_value_iteration(const FiniteMDP& mdp, const WassersteinBall& ball,
                                     SolveOptions opts = {});

/**
 * First-order sensitivity of the solved value at state x to the budget
 * delta: gamma * lambda_star at the greedy action. Returns 0 when the
 * constraint is slack (lambda_star = 0), in which case the value is
 * locally insensitive to both delta and the order.
 *
 * This is the one-step envelope derivative. It equals the derivative of
 * the fixed point itself exactly when the inner argmax states are locally
 * budget-insensitive; callers comparing against finite differences of a
 * full re-solve must use instances with that structure.
 */
double sensitivity_delta(const RobustSolution& sol, const FiniteMDP& mdp, int x);

/**
 * One-step envelope sensitivity of the solved value at state x to the
 * transport order p:
 *
 *   -gamma * lambda_star * sum_y P(y|x,f(x)) * (d^p/p) * (ln d - 1/p),
 *
 * with d = |z*(y) - y| the displacement of the inner argmax. Zero-
 * displacement terms contribute nothing. Among tied argmax states the
 * one with the largest value (most displaced toward the expensive
 * region) is taken.
 */
double sensitivity_p(const RobustSolution& sol, const FiniteMDP& mdp,
                     const WassersteinBall& ball, int x);

/**
 * Exact transport cost between two distributions q and p supported on the
 * same increasing positions, under ground_cost_1d of the given order.
 * Computed with the monotone (quantile) coupling, which is optimal on the
 * line for convex costs.
 */
double transport_cost_1d(std::span<const double> positions, std::span<const double> q,
                         std::span<const double> p, double order_p);

}  // namespace wrl
