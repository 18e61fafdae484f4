#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "wrl/mdp.hpp"
#include "wrl/rng.hpp"
#include "wrl/robust_bellman.hpp"

using namespace wrl;

namespace {

// Two states on the line, state 0 feeds itself, state 1 absorbing and
// costly. The classic hand instance: with u = (0, 1), p = 1, delta = 0.5
// the backup at (0, 0) is 0.45 with minimizer lambda = 1.
FiniteMDP two_state_line() {
  FiniteMDP m;
  m.states = {0.0, 1.0};
  m.transition = {{{1.0, 0.0}}, {{0.0, 1.0}}};
  m.cost = {{0.0}, {1.0}};
  m.gamma = 0.9;
  m.c_bar = 1.0;
  return m;
}

WassersteinBall ball_of(double p, double delta) {
  WassersteinBall b;
  b.order_p = p;
  b.delta = delta;
  return b;
}

/**
 * Probe / buffer / sink family. State 0 lands on state 1, state 1 lands
 * on state 2, state 2 is absorbing with cost 1. States 1 and 2 have
 * penalty 0 at the fixed point (their landing spot already has the
 * largest value), so their values do not move with the budget and the
 * one-step sensitivity at state 0 equals the derivative of the resolved
 * fixed point exactly. The breakpoint at state 0 is
 * (u(2) - u(1)) / kappa(2, 1), independent of delta on a whole interval.
 */
FiniteMDP probe_mdp() {
  FiniteMDP m;
  m.states = {0.0, 1.0, 2.0};
  m.transition = {{{0.0, 1.0, 0.0}}, {{0.0, 0.0, 1.0}}, {{0.0, 0.0, 1.0}}};
  m.cost = {{0.0}, {0.0}, {1.0}};
  m.gamma = 0.9;
  m.c_bar = 1.0;
  return m;
}

FiniteMDP random_mdp(Rng& rng) {
  FiniteMDP m;
  const int n = 2 + static_cast<int>(rng.below(3));  // 2..4 states
  double pos = rng.uniform(-1.0, 0.0);
  for (int i = 0; i < n; ++i) {
    m.states.push_back(pos);
    pos += rng.uniform(0.2, 1.2);
  }
  m.transition.resize(n);
  m.cost.resize(n);
  for (int x = 0; x < n; ++x) {
    const int actions = 1 + static_cast<int>(rng.below(2));
    for (int a = 0; a < actions; ++a) {
      std::vector<double> row(n);
      double sum = 0.0;
      for (double& v : row) {
        v = rng.uniform(0.0, 1.0);
        sum += v;
      }
      for (double& v : row) v /= sum;
      m.transition[x].push_back(row);
      m.cost[x].push_back(rng.uniform(0.0, 1.0));
    }
  }
  m.gamma = 0.9;
  m.c_bar = 1.0;
  m.validate();
  return m;
}

ValueTable random_table(Rng& rng, const FiniteMDP& m, double hi) {
  ValueTable u(m.states.size());
  for (double& v : u) v = rng.uniform(0.0, hi);
  return u;
}

// Independent classical solver, no transport anywhere. Oracle for the
// zero-budget reduction.
ValueTable classical_vi(const FiniteMDP& m) {
  ValueTable u(m.states.size(), 0.0);
  for (int it = 0; it < 100000; ++it) {
    ValueTable next(u.size());
    double change = 0.0;
    for (int x = 0; x < m.state_count(); ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (int a = 0; a < m.action_count(x); ++a) {
        double v = m.cost[x][a];
        for (int y = 0; y < m.state_count(); ++y)
          v += m.gamma * m.transition[x][a][y] * u[y];
        best = std::min(best, v);
      }
      next[x] = best;
      change = std::max(change, std::abs(best - u[x]));
    }
    u = std::move(next);
    if (change <= 1e-12) break;
  }
  return u;
}

}  // namespace

TEST_CASE("penalized backup hand values") {
  const FiniteMDP m = two_state_line();
  const ValueTable u{0.0, 1.0};
  const WassersteinBall b = ball_of(1.0, 0.5);

  // 0.9 * (1 * 0.5 + max(0 - 0, 1 - 1)) = 0.45
  CHECK(dual_penalized_backup(m, b, u, 0, 0, 1.0) == doctest::Approx(0.45).epsilon(1e-12));
  // lambda = 0 drops the penalty, the inner max is the global max of u
  CHECK(dual_penalized_backup(m, b, u, 0, 0, 0.0) == doctest::Approx(0.9).epsilon(1e-12));

  CHECK_THROWS_AS((void)dual_penalized_backup(m, b, u, 0, 0, -1e-9), std::invalid_argument);
}

TEST_CASE("penalized backup with constant table and zero budget") {
  FiniteMDP m = two_state_line();
  m.cost[0][0] = 0.3;
  const ValueTable u{4.0, 4.0};
  const WassersteinBall b = ball_of(2.0, 0.0);
  for (const double lam : {0.0, 0.5, 3.0, 100.0}) {
    CHECK(dual_penalized_backup(m, b, u, 0, 0, lam) ==
          doctest::Approx(0.3 + 0.9 * 4.0).epsilon(1e-12));
  }
}

TEST_CASE("q backup minimizes the dual exactly") {
  const FiniteMDP m = two_state_line();
  const ValueTable u{0.0, 1.0};
  const DualBackup d = robust_q_backup(m, ball_of(1.0, 0.5), u, 0, 0);
  CHECK(d.value == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(d.lambda_star == doctest::Approx(1.0).epsilon(1e-12));

  // never above a dense lambda scan
  for (int i = 0; i <= 400; ++i) {
    const double lam = 0.01 * i;
    CHECK(d.value <= dual_penalized_backup(m, ball_of(1.0, 0.5), u, 0, 0, lam) + 1e-12);
  }
}

TEST_CASE("q backup reduces to the standard backup at zero budget") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const FiniteMDP m = random_mdp(rng);
    const ValueTable u = random_table(rng, m, m.value_upper_bound());
    for (int x = 0; x < m.state_count(); ++x) {
      for (int a = 0; a < m.action_count(x); ++a) {
        double standard = m.cost[x][a];
        for (int y = 0; y < m.state_count(); ++y)
          standard += m.gamma * m.transition[x][a][y] * u[y];
        const DualBackup d = robust_q_backup(m, ball_of(2.0, 0.0), u, x, a);
        CHECK(d.value == doctest::Approx(standard).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("q backup null instance and bounds") {
  FiniteMDP m = two_state_line();
  m.cost = {{0.0}, {0.0}};
  const ValueTable zero{0.0, 0.0};
  const DualBackup d = robust_q_backup(m, ball_of(1.0, 0.5), zero, 0, 0);
  CHECK(d.value == 0.0);
  CHECK(d.lambda_star == 0.0);  // ties break toward the smallest penalty

  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const FiniteMDP rm = random_mdp(rng);
    const ValueTable u = random_table(rng, rm, rm.value_upper_bound());
    const double umax = *std::max_element(u.begin(), u.end());
    for (int x = 0; x < rm.state_count(); ++x) {
      for (int a = 0; a < rm.action_count(x); ++a) {
        double standard = rm.cost[x][a];
        for (int y = 0; y < rm.state_count(); ++y)
          standard += rm.gamma * rm.transition[x][a][y] * u[y];
        const DualBackup d2 = robust_q_backup(rm, ball_of(2.0, 0.3), u, x, a);
        CHECK(d2.value <= rm.cost[x][a] + rm.gamma * umax + 1e-12);
        CHECK(d2.value >= standard - 1e-12);
      }
    }
  }
}

TEST_CASE("primal oracle hand values") {
  const FiniteMDP m = two_state_line();
  const ValueTable u{0.0, 1.0};
  // Q = (0.5, 0.5) is feasible: half the mass moves distance 1 at order 1
  CHECK(primal_backup_oracle(m, ball_of(1.0, 0.5), u, 0, 0, 10) ==
        doctest::Approx(0.45).epsilon(1e-12));
  // zero budget pins Q = P
  CHECK(primal_backup_oracle(m, ball_of(1.0, 0.0), u, 0, 0, 10) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // constant u makes the objective flat over the simplex
  const ValueTable c{2.5, 2.5};
  CHECK(primal_backup_oracle(m, ball_of(1.0, 0.8), c, 0, 0, 12) ==
        doctest::Approx(0.9 * 2.5).epsilon(1e-12));
  CHECK_THROWS_AS((void)primal_backup_oracle(m, ball_of(1.0, 0.5), u, 0, 0, 0),
                  std::invalid_argument);
}

TEST_CASE("primal value grows with grid refinement and never beats the dual") {
  Rng rng(11);
  for (int trial = 0; trial < 8; ++trial) {
    const FiniteMDP m = random_mdp(rng);
    if (m.state_count() > 3) continue;  // keep the enumeration cheap
    const ValueTable u = random_table(rng, m, 0.05);
    const WassersteinBall b = ball_of(trial % 2 == 0 ? 1.0 : 2.0, rng.uniform(0.0, 1.0));
    for (int x = 0; x < m.state_count(); ++x) {
      for (int a = 0; a < m.action_count(x); ++a) {
        const double g10 = primal_backup_oracle(m, b, u, x, a, 10);
        const double g20 = primal_backup_oracle(m, b, u, x, a, 20);
        const double g60 = primal_backup_oracle(m, b, u, x, a, 60);
        const double dual = robust_q_backup(m, b, u, x, a).value;
        CHECK(g10 <= g20 + 1e-12);  // nested grids
        CHECK(g20 <= g60 + 1e-12);
        CHECK(g60 <= dual + 1e-12);
        CHECK(dual - g60 <= 1e-3);  // strong duality at desk scale
      }
    }
  }
}

TEST_CASE("bellman operator composes per-action backups") {
  // null problem
  FiniteMDP m = two_state_line();
  m.cost = {{0.0}, {0.0}};
  const ValueTable zero{0.0, 0.0};
  const ValueTable h0 = robust_bellman_operator(m, ball_of(1.0, 0.5), zero);
  CHECK(h0[0] == 0.0);
  CHECK(h0[1] == 0.0);

  // single action per state: operator equals the q backup
  const FiniteMDP s = two_state_line();
  const ValueTable u{0.0, 1.0};
  const ValueTable hu = robust_bellman_operator(s, ball_of(1.0, 0.5), u);
  CHECK(hu[0] == doctest::Approx(robust_q_backup(s, ball_of(1.0, 0.5), u, 0, 0).value));

  // second action at state 0 backs up to 0.60; the operator takes the min
  FiniteMDP two = two_state_line();
  two.transition[0].push_back({1.0, 0.0});
  two.cost[0].push_back(0.15);  // 0.15 + 0.45 = 0.60
  const ValueTable h2 = robust_bellman_operator(two, ball_of(1.0, 0.5), u);
  CHECK(h2[0] == doctest::Approx(0.45).epsilon(1e-12));
}

TEST_CASE("operator laws on random instances") {
  Rng rng(2024);
  const double bound_gamma = 0.9;
  for (int trial = 0; trial < 120; ++trial) {
    const FiniteMDP m = random_mdp(rng);
    const WassersteinBall b = ball_of(trial % 2 == 0 ? 1.0 : 2.0, rng.uniform(0.0, 1.0));
    const double hi = m.value_upper_bound();
    const ValueTable u1 = random_table(rng, m, hi);
    const ValueTable u2 = random_table(rng, m, hi);

    const ValueTable h1 = robust_bellman_operator(m, b, u1);
    const ValueTable h2 = robust_bellman_operator(m, b, u2);

    double du = 0.0, dh = 0.0;
    for (std::size_t i = 0; i < u1.size(); ++i) {
      du = std::max(du, std::abs(u1[i] - u2[i]));
      dh = std::max(dh, std::abs(h1[i] - h2[i]));
    }
    CHECK(dh <= bound_gamma * du + 1e-9);  // contraction

    // monotonicity: compare against the componentwise max
    ValueTable upper(u1.size());
    for (std::size_t i = 0; i < u1.size(); ++i) upper[i] = std::max(u1[i], u2[i]);
    const ValueTable hupper = robust_bellman_operator(m, b, upper);
    for (std::size_t i = 0; i < u1.size(); ++i) {
      CHECK(hupper[i] >= h1[i] - 1e-9);
      CHECK(hupper[i] >= h2[i] - 1e-9);
    }

    // constant shift moves the output by gamma * C
    const double head = hi - *std::max_element(u1.begin(), u1.end());
    const double c = rng.uniform(0.0, head);
    ValueTable shifted = u1;
    for (double& v : shifted) v += c;
    const ValueTable hshift = robust_bellman_operator(m, b, shifted);
    for (std::size_t i = 0; i < u1.size(); ++i)
      CHECK(hshift[i] == doctest::Approx(h1[i] + bound_gamma * c).epsilon(1e-9));

    // range preservation
    for (const double v : h1) {
      CHECK(v >= -1e-12);
      CHECK(v <= hi + 1e-9);
    }
  }
}

TEST_CASE("policy evaluation operator") {
  FiniteMDP two = two_state_line();
  two.transition[0].push_back({1.0, 0.0});
  two.cost[0].push_back(0.15);
  const ValueTable u{0.0, 1.0};
  const WassersteinBall b = ball_of(1.0, 0.5);

  // point mass recovers the per-action backup
  const ValueTable v0 = policy_evaluation_operator(two, b, u, {{1.0, 0.0}, {1.0}});
  CHECK(v0[0] == doctest::Approx(0.45).epsilon(1e-12));
  const ValueTable v1 = policy_evaluation_operator(two, b, u, {{0.0, 1.0}, {1.0}});
  CHECK(v1[0] == doctest::Approx(0.60).epsilon(1e-12));

  // uniform mix averages the oracle-verified backups
  const ValueTable vu = policy_evaluation_operator(two, b, u, {{0.5, 0.5}, {1.0}});
  CHECK(vu[0] == doctest::Approx(0.525).epsilon(1e-12));

  CHECK_THROWS_AS(
      (void)policy_evaluation_operator(two, b, u, {{0.7, 0.7}, {1.0}}),
      std::invalid_argument);
  CHECK_THROWS_AS((void)policy_evaluation_operator(two, b, u, {{1.0}, {1.0}}),
                  std::invalid_argument);

  // zero budget reduces to the classical policy backup
  Rng rng(3);
  const FiniteMDP m = random_mdp(rng);
  const ValueTable ru = random_table(rng, m, m.value_upper_bound());
  std::vector<std::vector<double>> pol(m.state_count());
  for (int x = 0; x < m.state_count(); ++x) {
    pol[x].assign(m.action_count(x), 0.0);
    double sum = 0.0;
    for (double& w : pol[x]) {
      w = rng.uniform(0.1, 1.0);
      sum += w;
    }
    for (double& w : pol[x]) w /= sum;
  }
  const ValueTable got = policy_evaluation_operator(m, ball_of(2.0, 0.0), ru, pol);
  for (int x = 0; x < m.state_count(); ++x) {
    double want = 0.0;
    for (int a = 0; a < m.action_count(x); ++a) {
      double backup = m.cost[x][a];
      for (int y = 0; y < m.state_count(); ++y)
        backup += m.gamma * m.transition[x][a][y] * ru[y];
      want += pol[x][a] * backup;
    }
    CHECK(got[x] == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("value iteration reaches the fixed point") {
  // null costs solve immediately
  FiniteMDP null = two_state_line();
  null.cost = {{0.0}, {0.0}};
  const RobustSolution s0 = solve_value_iteration(null, ball_of(1.0, 0.5));
  CHECK(s0.converged);
  CHECK(s0.iterations == 1);
  CHECK(s0.value[0] == 0.0);
  CHECK(s0.value[1] == 0.0);

  // the hand instance: u*(1) = 1/(1-gamma); u*(0) from the half-mass move
  const FiniteMDP m = two_state_line();
  const WassersteinBall b = ball_of(1.0, 0.5);
  const RobustSolution sol = solve_value_iteration(m, b);
  CHECK(sol.converged);
  CHECK(sol.value[1] == doctest::Approx(10.0).epsilon(1e-6));
  CHECK(sol.value[0] == doctest::Approx(0.9 * (0.5 * sol.value[0] + 0.5 * sol.value[1]))
                            .epsilon(1e-6));

  // fixed point property against both routes
  const DualBackup back = robust_q_backup(m, b, sol.value, 0, 0);
  CHECK(back.value == doctest::Approx(sol.value[0]).epsilon(1e-6));
  const double primal = primal_backup_oracle(m, b, sol.value, 0, 0, 200);
  CHECK(primal <= back.value + 1e-12);
  CHECK(back.value - primal <= 0.03);  // grid rounding only

  // residual flagging: one iteration cannot converge here
  const RobustSolution trunc = solve_value_iteration(m, b, {1e-8, 1});
  CHECK_FALSE(trunc.converged);
  CHECK(trunc.iterations == 1);
}

TEST_CASE("zero budget solves match a classical solver") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const FiniteMDP m = random_mdp(rng);
    const RobustSolution sol = solve_value_iteration(m, ball_of(2.0, 0.0), {1e-10, 200000});
    const ValueTable want = classical_vi(m);
    REQUIRE(sol.converged);
    for (int x = 0; x < m.state_count(); ++x)
      CHECK(sol.value[x] == doctest::Approx(want[x]).epsilon(1e-6));
  }
}

TEST_CASE("fixed point is start independent") {
  Rng rng(5);
  const FiniteMDP m = random_mdp(rng);
  const WassersteinBall b = ball_of(1.0, 0.4);
  const double tol = 1e-9;
  const RobustSolution from_zero = solve_value_iteration(m, b, {tol, 200000});
  REQUIRE(from_zero.converged);

  // iterate by hand from the upper corner of the admissible range
  ValueTable u(m.states.size(), m.value_upper_bound());
  for (int it = 0; it < 200000; ++it) {
    ValueTable next = robust_bellman_operator(m, b, u);
    double change = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      change = std::max(change, std::abs(next[i] - u[i]));
    u = std::move(next);
    if (change <= tol) break;
  }
  const double slack = 2.0 * tol * m.gamma / (1.0 - m.gamma);
  for (std::size_t i = 0; i < u.size(); ++i)
    CHECK(std::abs(u[i] - from_zero.value[i]) <= slack);
}

TEST_CASE("values are nondecreasing in the budget") {
  Rng rng(17);
  const FiniteMDP m = random_mdp(rng);
  ValueTable prev;
  for (const double delta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const RobustSolution sol = solve_value_iteration(m, ball_of(1.0, delta));
    REQUIRE(sol.converged);
    if (!prev.empty()) {
      for (std::size_t i = 0; i < prev.size(); ++i) CHECK(sol.value[i] >= prev[i] - 1e-9);
    }
    prev = sol.value;
  }
}

TEST_CASE("budget sensitivity equals the resolved derivative on the probe family") {
  const FiniteMDP m = probe_mdp();

  struct Case {
    double order_p, delta, lambda_want, sens_want;
  };
  // order 1: breakpoint (10 - 9) / 1 = 1; order 2: (10 - 9) / (1/2) = 2
  const Case cases[] = {{1.0, 0.5, 1.0, 0.9}, {2.0, 0.3, 2.0, 1.8}};
  for (const Case& c : cases) {
    const WassersteinBall b = ball_of(c.order_p, c.delta);
    const RobustSolution sol = solve_value_iteration(m, b, {1e-11, 200000});
    REQUIRE(sol.converged);
    CHECK(sol.lambda_star[0][0] == doctest::Approx(c.lambda_want).epsilon(1e-8));
    CHECK(sensitivity_delta(sol, m, 0) == doctest::Approx(c.sens_want).epsilon(1e-8));

    // central difference of the full re-solve
    const double h = 1e-4;
    const RobustSolution lo = solve_value_iteration(m, ball_of(c.order_p, c.delta - h),
                                                    {1e-11, 200000});
    const RobustSolution hi = solve_value_iteration(m, ball_of(c.order_p, c.delta + h),
                                                    {1e-11, 200000});
    const double fd = (hi.value[0] - lo.value[0]) / (2.0 * h);
    CHECK(fd == doctest::Approx(c.sens_want).epsilon(1e-6));

    // downstream states must not feel the budget at all
    CHECK(sensitivity_delta(sol, m, 1) == 0.0);
    CHECK(sensitivity_delta(sol, m, 2) == 0.0);
  }
}

TEST_CASE("order sensitivity from the displacement formula") {
  const FiniteMDP m = probe_mdp();

  // order 1, displacement 1: -gamma * lambda * (1/p) * (ln 1 - 1/p) = +0.9
  {
    const RobustSolution sol = solve_value_iteration(m, ball_of(1.0, 0.5), {1e-11, 200000});
    REQUIRE(sol.converged);
    CHECK(sensitivity_p(sol, m, ball_of(1.0, 0.5), 0) == doctest::Approx(0.9).epsilon(1e-8));
    // the sink never pays transport
    CHECK(sensitivity_p(sol, m, ball_of(1.0, 0.5), 2) == 0.0);
  }
  // order 2, lambda = 2: -0.9 * 2 * (1/2) * (0 - 1/2) = +0.45
  {
    const RobustSolution sol = solve_value_iteration(m, ball_of(2.0, 0.3), {1e-11, 200000});
    REQUIRE(sol.converged);
    CHECK(sensitivity_p(sol, m, ball_of(2.0, 0.3), 0) == doctest::Approx(0.45).epsilon(1e-8));
  }
}

TEST_CASE("saturated budget leaves the dual flat from zero") {
  // Two states, budget 1 at order 1: moving the entire unit of mass the
  // unit distance costs exactly the budget, so the dual objective is
  // flat on [0, 1] and the smallest minimizer is reported. Both
  // sensitivities then vanish, matching the right derivatives (raising
  // the budget past the furthest displacement buys nothing).
  const FiniteMDP m = two_state_line();
  const WassersteinBall b = ball_of(1.0, 1.0);
  const RobustSolution sol = solve_value_iteration(m, b, {1e-11, 200000});
  REQUIRE(sol.converged);
  CHECK(sol.value[0] == doctest::Approx(9.0).epsilon(1e-7));
  CHECK(sol.lambda_star[0][0] == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(sensitivity_delta(sol, m, 0) == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(sensitivity_p(sol, m, b, 0) == doctest::Approx(0.0).epsilon(1e-7));

  const RobustSolution wider = solve_value_iteration(m, ball_of(1.0, 1.5), {1e-11, 200000});
  CHECK(wider.value[0] == doctest::Approx(sol.value[0]).epsilon(1e-7));
}

TEST_CASE("line transport cost by quantile coupling") {
  const std::vector<double> pos{0.0, 1.0};
  const std::vector<double> p{1.0, 0.0};
  const std::vector<double> half{0.5, 0.5};
  const std::vector<double> far{0.0, 1.0};
  CHECK(transport_cost_1d(pos, half, p, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(transport_cost_1d(pos, far, p, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(transport_cost_1d(pos, half, p, 2.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(transport_cost_1d(pos, p, p, 2.0) == 0.0);

  // symmetric in the two marginals for these instances
  const std::vector<double> q{0.25, 0.75};
  CHECK(transport_cost_1d(pos, q, p, 1.0) ==
        doctest::Approx(transport_cost_1d(pos, p, q, 1.0)).epsilon(1e-12));

  const std::vector<double> pos3{0.0, 0.5, 2.0};
  const std::vector<double> q3{0.25, 0.5, 0.25};
  const std::vector<double> p3{1.0, 0.0, 0.0};
  // move 0.5 from position 0 to 0.5 and 0.25 from 0 to 2
  CHECK(transport_cost_1d(pos3, q3, p3, 1.0) ==
        doctest::Approx(0.5 * 0.5 + 0.25 * 2.0).epsilon(1e-12));
}
