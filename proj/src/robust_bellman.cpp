#include "wrl/robust_bellman.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace wrl {

namespace {

void check_state_action(const FiniteMDP& mdp, int x, int a) {
  if (x < 0 || x >= mdp.state_count())
    throw std::invalid_argument("state index " + std::to_string(x) + " out of range");
  if (a < 0 || a >= mdp.action_count(x))
    throw std::invalid_argument("action index " + std::to_string(a) +
                                " out of range for state " + std::to_string(x));
}

// max_z u(z) - lambda * kappa(z, y) over the finite state set.
double inner_max(const FiniteMDP& mdp, const ValueTable& u, double lambda, int y,
                 double order_p) {
  double best = -std::numeric_limits<double>::infinity();
  for (int z = 0; z < mdp.state_count(); ++z) {
    const double v = u[z] - lambda * ground_cost_1d(mdp.states[z], mdp.states[y], order_p);
    if (v > best) best = v;
  }
  return best;
}

double dual_value(const FiniteMDP& mdp, const WassersteinBall& ball, const ValueTable& u,
                  int x, int a, double lambda) {
  const auto& row = mdp.transition[x][a];
  double expect = 0.0;
  for (int y = 0; y < mdp.state_count(); ++y) {
    if (row[y] == 0.0) continue;
    expect += row[y] * inner_max(mdp, u, lambda, y, ball.order_p);
  }
  return mdp.cost[x][a] + mdp.gamma * (lambda * ball.delta + expect);
}

}  // namespace

double dual_penalized_backup(const FiniteMDP& mdp, const WassersteinBall& ball,
                             const ValueTable& u, int x, int a, double lambda) {
  mdp.validate();
  ball.validate();
  validate_value_table(mdp, u);
  check_state_action(mdp, x, a);
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("dual_penalized_backup: lambda must be finite and >= 0");
  return dual_value(mdp, ball, u, x, a, lambda);
}

DualBackup robust_q_backup(const FiniteMDP& mdp, const WassersteinBall& ball,
                           const ValueTable& u, int x, int a) {
  mdp.validate();
  ball.validate();
  validate_value_table(mdp, u);
  check_state_action(mdp, x, a);

  const int n = mdp.state_count();
  const auto& row = mdp.transition[x][a];

  // Candidate minimizers: 0 plus every breakpoint of the piecewise-linear
  // dual. Two inner branches z1, z2 intersect where
  //   u(z1) - lambda*kappa(z1,y) = u(z2) - lambda*kappa(z2,y).
  // Only y with positive probability contribute pieces, so other triples
  // are skipped; they could never host a kink of the objective.
  std::vector<double> candidates;
  candidates.push_back(0.0);
  for (int y = 0; y < n; ++y) {
    if (row[y] == 0.0) continue;
    for (int z1 = 0; z1 < n; ++z1) {
      for (int z2 = z1 + 1; z2 < n; ++z2) {
        const double dk = ground_cost_1d(mdp.states[z1], mdp.states[y], ball.order_p) -
                          ground_cost_1d(mdp.states[z2], mdp.states[y], ball.order_p);
        if (dk == 0.0) continue;
        const double cand = (u[z1] - u[z2]) / dk;
        if (cand > 0.0 && std::isfinite(cand)) candidates.push_back(cand);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<double> values(candidates.size());
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    values[i] = dual_value(mdp, ball, u, x, a, candidates[i]);
    best_value = std::min(best_value, values[i]);
  }
  // Ties go to the smallest lambda; a relative slack keeps the choice
  // stable when two breakpoints evaluate equal up to rounding.
  const double tie = 1e-12 * std::max(1.0, std::abs(best_value));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (values[i] <= best_value + tie) return DualBackup{best_value, candidates[i]};
  }
  return DualBackup{best_value, 0.0};  // unreachable
}

double transport_cost_1d(std::span<const double> positions, std::span<const double> q,
                         std::span<const double> p, double order_p) {
  const std::size_t n = positions.size();
  if (q.size() != n || p.size() != n)
    throw std::invalid_argument("transport_cost_1d: size mismatch");
  // Monotone coupling: walk both mass vectors left to right, always
  // matching the lowest unserved quantiles.
  double cost = 0.0;
  std::size_t i = 0, j = 0;
  double qi = n ? q[0] : 0.0, pj = n ? p[0] : 0.0;
  while (i < n && j < n) {
    const double m = std::min(qi, pj);
    if (m > 0.0) cost += m * ground_cost_1d(positions[i], positions[j], order_p);
    qi -= m;
    pj -= m;
    if (qi <= 1e-15) {
      ++i;
      if (i < n) qi = q[i];
    }
    if (pj <= 1e-15 && j < n) {
      ++j;
      if (j < n) pj = p[j];
    }
  }
  return cost;
}

double primal_backup_oracle(const FiniteMDP& mdp, const WassersteinBall& ball,
                            const ValueTable& u, int x, int a, int grid_k) {
  mdp.validate();
  ball.validate();
  validate_value_table(mdp, u);
  check_state_action(mdp, x, a);
  if (grid_k < 1) throw std::invalid_argument("primal_backup_oracle: grid_k must be >= 1");

  const int n = mdp.state_count();
  const auto& p_row = mdp.transition[x][a];
  std::vector<double> q(n, 0.0);
  std::vector<int> k(n, 0);
  // The reference row costs zero transport, so it is feasible at any
  // budget; seeding the max with it keeps the bound valid on grids that
  // miss the row entirely and keeps refinements monotone.
  double best = 0.0;
  for (int i = 0; i < n; ++i) best += p_row[i] * u[i];

  // Enumerate all compositions of grid_k into n parts.
  std::function<void(int, int)> rec = [&](int idx, int remaining) {
    if (idx == n - 1) {
      k[idx] = remaining;
      for (int i = 0; i < n; ++i) q[i] = static_cast<double>(k[i]) / grid_k;
      const double d = transport_cost_1d(mdp.states, q, p_row, ball.order_p);
      if (d <= ball.delta + 1e-12) {
        double obj = 0.0;
        for (int i = 0; i < n; ++i) obj += q[i] * u[i];
        best = std::max(best, obj);
      }
      return;
    }
    for (int take = 0; take <= remaining; ++take) {
      k[idx] = take;
      rec(idx + 1, remaining - take);
    }
  };
  rec(0, grid_k);

  return mdp.cost[x][a] + mdp.gamma * best;
}

ValueTable robust_bellman_operator(const FiniteMDP& mdp, const WassersteinBall& ball,
                                   const ValueTable& u) {
  mdp.validate();
  ball.validate();
  validate_value_table(mdp, u);
  ValueTable out(u.size(), 0.0);
  for (int x = 0; x < mdp.state_count(); ++x) {
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < mdp.action_count(x); ++a)
      best = std::min(best, robust_q_backup(mdp, ball, u, x, a).value);
    out[x] = best;
  }
  return out;
}

ValueTable policy_evaluation_operator(const FiniteMDP& mdp, const WassersteinBall& ball,
                                      const ValueTable& u,
                                      const std::vector<std::vector<double>>& policy) {
  mdp.validate();
  ball.validate();
  validate_value_table(mdp, u);
  if (static_cast<int>(policy.size()) != mdp.state_count())
    throw std::invalid_argument("policy_evaluation_operator: policy size mismatch");
  ValueTable out(u.size(), 0.0);
  for (int x = 0; x < mdp.state_count(); ++x) {
    const auto& w = policy[x];
    if (static_cast<int>(w.size()) != mdp.action_count(x))
      throw std::invalid_argument("policy_evaluation_operator: action weights for state " +
                                  std::to_string(x) + " have wrong length");
    double sum = 0.0;
    for (double wi : w) {
      if (!(wi >= 0.0))
        throw std::invalid_argument("policy_evaluation_operator: negative action weight");
      sum += wi;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("policy_evaluation_operator: action weights for state " +
                                  std::to_string(x) + " do not sum to 1");
    double v = 0.0;
    for (int a = 0; a < mdp.action_count(x); ++a) {
      if (w[a] == 0.0) continue;
      v += w[a] * robust_q_backup(mdp, ball, u, x, a).value;
    }
    out[x] = v;
  }
  return out;
}

RobustSolution solve_value_iteration(const FiniteMDP& mdp, const WassersteinBall& ball,
                                     SolveOptions opts) {
  mdp.validate();
  ball.validate();
  if (!(opts.tol > 0.0)) throw std::invalid_argument("solve_value_iteration: tol must be > 0");
  if (opts.max_iter < 1)
    throw std::invalid_argument("solve_value_iteration: max_iter must be >= 1");

  RobustSolution sol;
  sol.value.assign(mdp.states.size(), 0.0);
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < opts.max_iter) {
    ValueTable next = robust_bellman_operator(mdp, ball, sol.value);
    residual = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i)
      residual = std::max(residual, std::abs(next[i] - sol.value[i]));
    sol.value = std::move(next);
    ++it;
    if (residual <= opts.tol) break;
  }
  sol.iterations = it;
  sol.residual = residual;
  sol.converged = residual <= opts.tol;

  sol.policy.assign(mdp.states.size(), 0);
  sol.lambda_star.assign(mdp.states.size(), {});
  for (int x = 0; x < mdp.state_count(); ++x) {
    sol.lambda_star[x].assign(mdp.action_count(x), 0.0);
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < mdp.action_count(x); ++a) {
      const DualBackup b = robust_q_backup(mdp, ball, sol.value, x, a);
      sol.lambda_star[x][a] = b.lambda_star;
      if (b.value < best) {  // smallest action index wins ties
        best = b.value;
        sol.policy[x] = a;
      }
    }
  }
  return sol;
}

double sensitivity_delta(const RobustSolution& sol, const FiniteMDP& mdp, int x) {
  if (x < 0 || x >= mdp.state_count())
    throw std::invalid_argument("sensitivity_delta: state index out of range");
  const int a = sol.policy.at(x);
  const double lam = sol.lambda_star.at(x).at(a);
  if (lam <= 0.0) return 0.0;
  return mdp.gamma * lam;
}

double sensitivity_p(const RobustSolution& sol, const FiniteMDP& mdp,
                     const WassersteinBall& ball, int x) {
  if (x < 0 || x >= mdp.state_count())
    throw std::invalid_argument("sensitivity_p: state index out of range");
  const int a = sol.policy.at(x);
  const double lam = sol.lambda_star.at(x).at(a);
  if (lam <= 0.0) return 0.0;

  const auto& row = mdp.transition[x][a];
  const double p = ball.order_p;
  double acc = 0.0;
  for (int y = 0; y < mdp.state_count(); ++y) {
    if (row[y] == 0.0) continue;
    // Inner argmax at the minimizing penalty. Among ties take the state
    // with the largest value (then the larger displacement): the branch
    // that actually transports mass.
    double best = -std::numeric_limits<double>::infinity();
    for (int z = 0; z < mdp.state_count(); ++z) {
      const double v =
          sol.value[z] - lam * ground_cost_1d(mdp.states[z], mdp.states[y], p);
      if (v > best) best = v;
    }
    const double tie = 1e-12 * std::max(1.0, std::abs(best));
    int zstar = -1;
    for (int z = 0; z < mdp.state_count(); ++z) {
      const double v =
          sol.value[z] - lam * ground_cost_1d(mdp.states[z], mdp.states[y], p);
      if (v < best - tie) continue;
      if (zstar < 0 || sol.value[z] > sol.value[zstar] ||
          (sol.value[z] == sol.value[zstar] &&
           std::abs(mdp.states[z] - mdp.states[y]) >
               std::abs(mdp.states[zstar] - mdp.states[y])))
        zstar = z;
    }
    const double d = std::abs(mdp.states[zstar] - mdp.states[y]);
    if (d == 0.0) continue;
    acc += row[y] * (std::pow(d, p) / p) * (std::log(d) - 1.0 / p);
  }
  return -mdp.gamma * lam * acc;
}

}  // namespace wrl
