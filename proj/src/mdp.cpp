#include "wrl/mdp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace wrl {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("FiniteMDP: " + msg);
}

}  // namespace

void FiniteMDP::validate() const {
  const std::size_t n = states.size();
  if (n == 0) fail("state set is empty");
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(states[i] < states[i + 1]))
      fail("state embeddings must be strictly increasing (index " + std::to_string(i) + ")");
  }
  for (double s : states)
    if (!std::isfinite(s)) fail("state embedding is not finite");
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
  if (!(c_bar >= 0.0) || !std::isfinite(c_bar)) fail("c_bar must be finite and nonnegative");
  if (transition.size() != n) fail("transition table must have one entry per state");
  if (cost.size() != n) fail("cost table must have one entry per state");
  for (std::size_t x = 0; x < n; ++x) {
    const auto& rows = transition[x];
    if (rows.empty()) fail("state " + std::to_string(x) + " has no actions");
    if (cost[x].size() != rows.size())
      fail("state " + std::to_string(x) + ": cost/action count mismatch");
    for (std::size_t a = 0; a < rows.size(); ++a) {
      const auto& row = rows[a];
      if (row.size() != n)
        fail("transition row (" + std::to_string(x) + ", " + std::to_string(a) +
             ") has wrong length");
      double sum = 0.0;
      for (double pr : row) {
        if (!(pr >= 0.0)) {
          fail("transition row (" + std::to_string(x) + ", " + std::to_string(a) +
               ") has a negative component");
        }
        sum += pr;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        fail("transition row (" + std::to_string(x) + ", " + std::to_string(a) +
             ") sums to " + std::to_string(sum) + ", expected 1 within 1e-12");
      const double c = cost[x][a];
      if (!std::isfinite(c) || c < 0.0 || c > c_bar)
        fail("cost (" + std::to_string(x) + ", " + std::to_string(a) +
             ") lies outside [0, c_bar]");
    }
  }
}

double WassersteinBall::epsilon() const {
  return std::pow(order_p * delta, 1.0 / order_p);
}

void WassersteinBall::validate() const {
  if (!(order_p >= 1.0) || !std::isfinite(order_p))
    throw std::invalid_argument("WassersteinBall: order_p must be finite and >= 1");
  if (!(delta >= 0.0) || !std::isfinite(delta))
    throw std::invalid_argument("WassersteinBall: delta must be finite and >= 0");
}

WassersteinBall WassersteinBall::from_epsilon(double order_p, double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw std::invalid_argument("WassersteinBall: epsilon must be finite and >= 0");
  WassersteinBall ball{order_p, std::pow(epsilon, order_p) / order_p};
  ball.validate();
  return ball;
}

double ground_cost(std::span<const double> z, std::span<const double> y, double order_p) {
  if (z.size() != y.size())
    throw std::invalid_argument("ground_cost: dimension mismatch between z and y");
  if (!(order_p >= 1.0))
    throw std::invalid_argument("ground_cost: order_p must be >= 1");
  double sq = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = z[i] - y[i];
    sq += d * d;
  }
  if (sq == 0.0) return 0.0;
  if (order_p == 2.0) return 0.5 * sq;
  const double nrm = std::sqrt(sq);
  if (order_p == 1.0) return nrm;
  return std::pow(nrm, order_p) / order_p;
}

double ground_cost_1d(double z, double y, double order_p) {
  const double d = std::abs(z - y);
  if (d == 0.0) return 0.0;
  if (order_p == 2.0) return 0.5 * d * d;
  if (order_p == 1.0) return d;
  return std::pow(d, order_p) / order_p;
}

void validate_value_table(const FiniteMDP& mdp, const ValueTable& u) {
  if (u.size() != mdp.states.size())
    throw std::invalid_argument("value table size does not match state count");
  const double hi = mdp.value_upper_bound() + 1e-9;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i]) || u[i] < -1e-9 || u[i] > hi)
      throw std::invalid_argument("value table entry " + std::to_string(i) +
                                  " lies outside [0, c_bar/(1-gamma)]");
  }
}

}  // namespace wrl
