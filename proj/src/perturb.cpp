#include "wrl/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "wrl/mdp.hpp"

namespace wrl {

namespace {

std::string point_to_string(std::span<const double> v) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

void require_finite_point(std::span<const double> v, const char* what) {
  for (double c : v)
    if (!std::isfinite(c))
      throw std::runtime_error(std::string(what) + " is not finite at " + point_to_string(v));
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

}  // namespace

void PerturbationConfig::validate(int state_dim) const {
  if (!(delta >= 0.0) || !std::isfinite(delta))
    throw std::invalid_argument("PerturbationConfig: delta must be finite and >= 0");
  if (!(order_p >= 1.0) || !std::isfinite(order_p))
    throw std::invalid_argument("PerturbationConfig: order_p must be finite and >= 1");
  if (!(lambda_init >= 0.0))
    throw std::invalid_argument("PerturbationConfig: lambda_init must be >= 0");
  if (z_steps < 0) throw std::invalid_argument("PerturbationConfig: z_steps must be >= 0");
  if (!(beta1 > 0.0) || !(beta2 > 0.0))
    throw std::invalid_argument("PerturbationConfig: beta1 and beta2 must be positive");
  if (closed_form && order_p <= 1.0)
    throw std::invalid_argument("PerturbationConfig: the direct map needs order_p > 1");
  if (!z_init_offset.empty() && static_cast<int>(z_init_offset.size()) != state_dim)
    throw std::invalid_argument("PerturbationConfig: z_init_offset dimension mismatch");
  if (z_clip) {
    if (static_cast<int>(z_clip->first.size()) != state_dim ||
        static_cast<int>(z_clip->second.size()) != state_dim)
      throw std::invalid_argument("PerturbationConfig: z_clip dimension mismatch");
    for (std::size_t i = 0; i < z_clip->first.size(); ++i)
      if (!(z_clip->first[i] <= z_clip->second[i]))
        throw std::invalid_argument("PerturbationConfig: z_clip bounds are inverted");
  }
}

std::vector<std::string> PerturbationConfig::warnings() const {
  std::vector<std::string> out;
  if (delta > 0.0) {
    const double floor = std::pow(order_p * delta, -1.0 / order_p);
    if (lambda_init <= floor) {
      std::ostringstream os;
      os << "lambda_init = " << lambda_init << " is not above (p*delta)^(-1/p) = " << floor
         << "; the penalty may start too small to restrain the perturbation";
      out.push_back(os.str());
    }
  }
  return out;
}

std::vector<double> PerturbationConfig::z_start(std::span<const double> y) const {
  std::vector<double> z(y.begin(), y.end());
  if (!z_init_offset.empty()) {
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += delta * z_init_offset[i];
  }
  return z;
}

std::vector<double> grad_z(std::span<const double> z, std::span<const double> y,
                           double lambda, double order_p,
                           std::span<const double> grad_u_at_z) {
  if (z.size() != y.size() || z.size() != grad_u_at_z.size())
    throw std::invalid_argument("grad_z: dimension mismatch");
  if (!(lambda >= 0.0)) throw std::invalid_argument("grad_z: lambda must be >= 0");
  if (!(order_p >= 1.0)) throw std::invalid_argument("grad_z: order_p must be >= 1");

  std::vector<double> d(z.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    d[i] = z[i] - y[i];
    sq += d[i] * d[i];
  }
  std::vector<double> g(grad_u_at_z.begin(), grad_u_at_z.end());
  if (sq == 0.0 || lambda == 0.0) return g;  // penalty subgradient vanishes at z = y
  const double nrm = std::sqrt(sq);
  const double scale = lambda * std::pow(nrm, order_p - 2.0);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= scale * d[i];
  return g;
}

std::vector<double> ascend_z_from(std::span<const double> z0, std::span<const double> y,
                                  double lambda, const PerturbationConfig& cfg,
                                  const CriticEval& critic) {
  if (z0.size() != y.size()) throw std::invalid_argument("ascend_z_from: dimension mismatch");
  if (!(lambda >= 0.0)) throw std::invalid_argument("ascend_z_from: lambda must be >= 0");
  cfg.validate(static_cast<int>(y.size()));

  std::vector<double> z(z0.begin(), z0.end());
  auto clamp = [&cfg](std::vector<double>& v) {
    if (!cfg.z_clip) return;
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = std::clamp(v[i], cfg.z_clip->first[i], cfg.z_clip->second[i]);
  };
  clamp(z);
  for (int step = 0; step < cfg.z_steps; ++step) {
    const std::vector<double> gu = critic.grad_input(z);
    require_finite_point(gu, "critic gradient");
    const std::vector<double> g = grad_z(z, y, lambda, cfg.order_p, gu);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += cfg.beta1 * g[i];
    clamp(z);
    require_finite_point(z, "perturbed state");
  }
  if (!std::isfinite(critic.value(z)))
    throw std::runtime_error("critic value is not finite at " + point_to_string(z));
  return z;
}

std::vector<double> ascend_z(std::span<const double> y, double lambda,
                             const PerturbationConfig& cfg, const CriticEval& critic) {
  const std::vector<double> z0 = cfg.z_start(y);
  return ascend_z_from(z0, y, lambda, cfg, critic);
}

std::vector<double> closed_form_z(std::span<const double> y, double lambda, double order_p,
                                  std::span<const double> grad_u_at_y, bool paper_sign) {
  if (y.size() != grad_u_at_y.size())
    throw std::invalid_argument("closed_form_z: dimension mismatch");
  if (!(lambda > 0.0)) throw std::invalid_argument("closed_form_z: lambda must be > 0");
  if (!(order_p > 1.0)) throw std::invalid_argument("closed_form_z: order_p must be > 1");

  const double gn = norm2(grad_u_at_y);
  std::vector<double> z(y.begin(), y.end());
  if (gn == 0.0) return z;
  const double scale = std::pow(lambda, -1.0 / (order_p - 1.0)) *
                       std::pow(gn, -(order_p - 2.0) / (order_p - 1.0));
  const double sign = paper_sign ? -1.0 : 1.0;
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += sign * scale * grad_u_at_y[i];
  require_finite_point(z, "direct-map state");
  return z;
}

double lambda_gradient(std::span<const double> kappa_values, double delta) {
  if (kappa_values.empty())
    throw std::invalid_argument("lambda_gradient: empty transport-cost list");
  double mean = 0.0;
  for (double k : kappa_values) mean += k;
  mean /= static_cast<double>(kappa_values.size());
  return delta - mean;
}

PerturbationResult perturb_rollouts(std::span<const Transition> quadruples, double lambda,
                                    const PerturbationConfig& cfg, const CriticEval& critic,
                                    double gamma) {
  if (quadruples.empty())
    throw std::invalid_argument("perturb_rollouts: empty rollout batch");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("perturb_rollouts: lambda must be finite and >= 0");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("perturb_rollouts: gamma must lie in (0, 1)");
  const auto& first = quadruples.front();
  cfg.validate(static_cast<int>(first.y.size()));
  for (const auto& q : quadruples) {
    if (q.x != first.x || q.action != first.action)
      throw std::invalid_argument(
          "perturb_rollouts: all quadruples must share the same state and action");
    if (q.x.size() != q.y.size())
      throw std::invalid_argument("perturb_rollouts: state/next-state dimension mismatch");
  }

  const double n = static_cast<double>(quadruples.size());
  const double ux = critic.value(first.x);
  const std::vector<double> gx = critic.grad_params(first.x);

  PerturbationResult res;
  res.g_e.assign(critic.param_count(), 0.0);
  double kappa_sum = 0.0;

  for (const auto& q : quadruples) {
    std::vector<double> z;
    double lam_eff = lambda;
    if (q.terminal) {
      z.assign(q.y.begin(), q.y.end());
      lam_eff = 0.0;
    } else if (cfg.closed_form) {
      z = closed_form_z(q.y, lambda, cfg.order_p, critic.grad_input(q.y), cfg.paper_sign);
    } else {
      z = ascend_z(q.y, lambda, cfg, critic);
    }
    const double kap = ground_cost(z, q.y, cfg.order_p);
    const double uz = critic.value(z);
    res.e += q.cost + gamma * (lam_eff * cfg.delta + uz - lam_eff * kap) - ux;
    const std::vector<double> gz = critic.grad_params(z);
    for (std::size_t i = 0; i < res.g_e.size(); ++i) res.g_e[i] += gamma * gz[i] - gx[i];
    kappa_sum += kap;
    res.z_list.push_back(std::move(z));
  }

  res.e /= n;
  for (double& g : res.g_e) g /= n;
  res.kappa_mean = kappa_sum / n;
  res.lambda = std::max(0.0, lambda + cfg.beta2 * (cfg.delta - res.kappa_mean));
  return res;
}

}  // namespace wrl
