#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <stdexcept>
#include <string>
#include <vector>

#include "wrl/cartpole.hpp"
#include "wrl/evaluate.hpp"
#include "wrl/io.hpp"
#include "wrl/mdp.hpp"
#include "wrl/net.hpp"
#include "wrl/perturb.hpp"
#include "wrl/robust_bellman.hpp"
#include "wrl/train.hpp"

namespace py = pybind11;
using namespace wrl;

namespace {

OutputHead parse_head(const std::string& name) {
  if (name == "linear") return OutputHead::Linear;
  if (name == "softmax") return OutputHead::Softmax;
  throw std::invalid_argument("head must be 'linear' or 'softmax', got '" + name + "'");
}

std::string head_name(OutputHead head) {
  return head == OutputHead::Linear ? "linear" : "softmax";
}

EvalMode parse_mode(const std::string& name) {
  if (name == "greedy") return EvalMode::Greedy;
  if (name == "stochastic") return EvalMode::Stochastic;
  throw std::invalid_argument("mode must be 'greedy' or 'stochastic', got '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_wrl, mod) {
  mod.doc() = "Wasserstein-robust value backups, rollout perturbation, and actor-critic "
              "training on pole balancing";

  // ---- exact finite-MDP layer ----

  py::class_<FiniteMDP>(mod, "FiniteMDP")
      .def(py::init<>())
      .def_readwrite("states", &FiniteMDP::states)
      .def_readwrite("transition", &FiniteMDP::transition)
      .def_readwrite("cost", &FiniteMDP::cost)
      .def_readwrite("gamma", &FiniteMDP::gamma)
      .def_readwrite("c_bar", &FiniteMDP::c_bar)
      .def("state_count", &FiniteMDP::state_count)
      .def("action_count", &FiniteMDP::action_count, py::arg("x"))
      .def("value_upper_bound", &FiniteMDP::value_upper_bound)
      .def("validate", &FiniteMDP::validate);

  py::class_<WassersteinBall>(mod, "WassersteinBall")
      .def(py::init([](double order_p, double delta) {
             WassersteinBall b{order_p, delta};
             b.validate();
             return b;
           }),
           py::arg("order_p"), py::arg("delta"))
      .def_readwrite("order_p", &WassersteinBall::order_p)
      .def_readwrite("delta", &WassersteinBall::delta)
      .def("epsilon", &WassersteinBall::epsilon)
      .def_static("from_epsilon", &WassersteinBall::from_epsilon, py::arg("order_p"),
                  py::arg("epsilon"));

  py::class_<DualBackup>(mod, "DualBackup")
      .def_readonly("value", &DualBackup::value)
      .def_readonly("lambda_star", &DualBackup::lambda_star);

  py::class_<RobustSolution>(mod, "RobustSolution")
      .def_readonly("value", &RobustSolution::value)
      .def_readonly("policy", &RobustSolution::policy)
      .def_readonly("lambda_star", &RobustSolution::lambda_star)
      .def_readonly("iterations", &RobustSolution::iterations)
      .def_readonly("residual", &RobustSolution::residual)
      .def_readonly("converged", &RobustSolution::converged);

  mod.def("ground_cost",
          [](const std::vector<double>& z, const std::vector<double>& y, double order_p) {
            return ground_cost(z, y, order_p);
          },
          py::arg("z"), py::arg("y"), py::arg("order_p"),
          "Transport ground cost ||z - y||^p / p");
  mod.def("ground_cost_1d", &ground_cost_1d, py::arg("z"), py::arg("y"), py::arg("order_p"));
  mod.def("transport_cost_1d",
          [](const std::vector<double>& positions, const std::vector<double>& q,
             const std::vector<double>& p, double order_p) {
            return transport_cost_1d(positions, q, p, order_p);
          },
          py::arg("positions"), py::arg("q"), py::arg("p"), py::arg("order_p"),
          "Exact monotone-coupling transport cost between distributions on the line");

  mod.def("dual_penalized_backup", &dual_penalized_backup, py::arg("mdp"), py::arg("ball"),
          py::arg("u"), py::arg("x"), py::arg("a"), py::arg("lam"),
          "Penalized robust backup at fixed lambda");
  mod.def("robust_q_backup", &robust_q_backup, py::arg("mdp"), py::arg("ball"), py::arg("u"),
          py::arg("x"), py::arg("a"), "Exact min over lambda >= 0 of the penalized backup");
  mod.def("primal_backup_oracle", &primal_backup_oracle, py::arg("mdp"), py::arg("ball"),
          py::arg("u"), py::arg("x"), py::arg("a"), py::arg("grid_k"),
          "Brute-force primal evaluation on a simplex grid; lower-bounds the dual");
  mod.def("robust_bellman_operator", &robust_bellman_operator, py::arg("mdp"), py::arg("ball"),
          py::arg("u"), "One application of the robust Bellman operator");
  mod.def("policy_evaluation_operator", &policy_evaluation_operator, py::arg("mdp"),
          py::arg("ball"), py::arg("u"), py::arg("policy"));
  mod.def("solve_value_iteration",
          [](const FiniteMDP& mdp, const WassersteinBall& ball, double tol, int max_iter) {
            return solve_value_iteration(mdp, ball, SolveOptions{tol, max_iter});
          },
          py::arg("mdp"), py::arg("ball"), py::arg("tol") = 1e-8,
          py::arg("max_iter") = 100000, "Value iteration from u = 0 to the robust fixed point");
  mod.def("sensitivity_delta", &sensitivity_delta, py::arg("sol"), py::arg("mdp"), py::arg("x"),
          "First-order sensitivity of the solved value to the budget: gamma * lambda_star");
  mod.def("sensitivity_p", &sensitivity_p, py::arg("sol"), py::arg("mdp"), py::arg("ball"),
          py::arg("x"));

  // ---- networks ----

  py::class_<DenseNet>(mod, "DenseNet")
      .def(py::init([](std::vector<int> sizes, const std::string& head, std::uint64_t seed) {
             Rng rng(seed);
             return DenseNet(std::move(sizes), parse_head(head), rng);
           }),
           py::arg("layer_sizes"), py::arg("head"), py::arg("seed") = 0,
           "Fan-in scaled uniform init from a stream seeded with `seed`")
      .def_static("zeros",
                  [](std::vector<int> sizes, const std::string& head) {
                    return DenseNet::zeros(std::move(sizes), parse_head(head));
                  },
                  py::arg("layer_sizes"), py::arg("head"))
      .def_property_readonly("layer_sizes",
                             [](const DenseNet& n) { return n.layer_sizes(); })
      .def_property_readonly("head", [](const DenseNet& n) { return head_name(n.head()); })
      .def("param_count", &DenseNet::param_count)
      .def("params", &DenseNet::params)
      .def("set_params",
           [](DenseNet& n, const std::vector<double>& flat) { n.set_params(flat); },
           py::arg("flat"))
      .def("value",
           [](const DenseNet& n, const std::vector<double>& x) { return n.critic_forward(x); },
           py::arg("x"), "Scalar critic output (linear head)")
      .def("value_grad_input",
           [](const DenseNet& n, const std::vector<double>& x) {
             return n.critic_grad_input(x);
           },
           py::arg("x"))
      .def("policy",
           [](const DenseNet& n, const std::vector<double>& x) { return n.policy_forward(x); },
           py::arg("x"), "Action distribution (softmax head)")
      .def("policy_log_grad",
           [](const DenseNet& n, const std::vector<double>& x, int action) {
             return n.policy_log_grad(x, action);
           },
           py::arg("x"), py::arg("action"));

  mod.def("save_checkpoint", &save_checkpoint, py::arg("net"), py::arg("kind"),
          py::arg("path"), "Write a net with its role tag ('actor' or 'critic')");
  mod.def("load_checkpoint",
          [](const std::string& path) {
            Checkpoint c = load_checkpoint(path);
            return py::make_tuple(std::move(c.net), std::move(c.kind));
          },
          py::arg("path"), "Read a checkpoint back as (net, kind)");

  // ---- rollout perturbation ----

  py::class_<Transition>(mod, "Transition")
      .def(py::init([](std::vector<double> x, int action, double cost, std::vector<double> y,
                       bool terminal) {
             return Transition{std::move(x), action, cost, std::move(y), terminal};
           }),
           py::arg("x"), py::arg("action"), py::arg("cost"), py::arg("y"),
           py::arg("terminal") = false)
      .def_readwrite("x", &Transition::x)
      .def_readwrite("action", &Transition::action)
      .def_readwrite("cost", &Transition::cost)
      .def_readwrite("y", &Transition::y)
      .def_readwrite("terminal", &Transition::terminal);

  py::class_<PerturbationConfig>(mod, "PerturbationConfig")
      .def(py::init<>())
      .def_readwrite("delta", &PerturbationConfig::delta)
      .def_readwrite("order_p", &PerturbationConfig::order_p)
      .def_readwrite("lambda_init", &PerturbationConfig::lambda_init)
      .def_readwrite("z_steps", &PerturbationConfig::z_steps)
      .def_readwrite("beta1", &PerturbationConfig::beta1)
      .def_readwrite("beta2", &PerturbationConfig::beta2)
      .def_readwrite("closed_form", &PerturbationConfig::closed_form)
      .def_readwrite("paper_sign", &PerturbationConfig::paper_sign)
      .def_readwrite("z_init_offset", &PerturbationConfig::z_init_offset)
      .def_readwrite("z_clip", &PerturbationConfig::z_clip)
      .def("validate", &PerturbationConfig::validate, py::arg("state_dim"))
      .def("warnings", &PerturbationConfig::warnings)
      .def("z_start",
           [](const PerturbationConfig& cfg, const std::vector<double>& y) {
             return cfg.z_start(y);
           },
           py::arg("y"));

  py::class_<PerturbationResult>(mod, "PerturbationResult")
      .def_readonly("e", &PerturbationResult::e)
      .def_readonly("g_e", &PerturbationResult::g_e)
      .def_readonly("lam", &PerturbationResult::lambda)
      .def_readonly("z_list", &PerturbationResult::z_list)
      .def_readonly("kappa_mean", &PerturbationResult::kappa_mean);

  mod.def("grad_z",
          [](const std::vector<double>& z, const std::vector<double>& y, double lam,
             double order_p, const std::vector<double>& grad_u_at_z) {
            return grad_z(z, y, lam, order_p, grad_u_at_z);
          },
          py::arg("z"), py::arg("y"), py::arg("lam"), py::arg("order_p"),
          py::arg("grad_u_at_z"), "Ascent direction of z -> u(z) - lam * ||z - y||^p / p");
  mod.def("ascend_z",
          [](const std::vector<double>& y, double lam, const PerturbationConfig& cfg,
             const DenseNet& critic) {
            return ascend_z(y, lam, cfg, NetCritic(critic));
          },
          py::arg("y"), py::arg("lam"), py::arg("cfg"), py::arg("critic"),
          "Fixed-step ascent from the configured start");
  mod.def("closed_form_z",
          [](const std::vector<double>& y, double lam, double order_p,
             const std::vector<double>& grad_u_at_y, bool paper_sign) {
            return closed_form_z(y, lam, order_p, grad_u_at_y, paper_sign);
          },
          py::arg("y"), py::arg("lam"), py::arg("order_p"), py::arg("grad_u_at_y"),
          py::arg("paper_sign") = false, "Direct perturbation map for order_p > 1");
  mod.def("lambda_gradient",
          [](const std::vector<double>& kappa_values, double delta) {
            return lambda_gradient(kappa_values, delta);
          },
          py::arg("kappa_values"), py::arg("delta"), "delta - mean(kappa)");
  mod.def("perturb_rollouts",
          [](const std::vector<Transition>& quadruples, double lam,
             const PerturbationConfig& cfg, const DenseNet& critic, double gamma) {
            return perturb_rollouts(quadruples, lam, cfg, NetCritic(critic), gamma);
          },
          py::arg("quadruples"), py::arg("lam"), py::arg("cfg"), py::arg("critic"),
          py::arg("gamma"),
          "Robust error and critic gradient of n rollouts sharing one (x, action)");

  // ---- environment ----

  py::class_<CartPoleParams>(mod, "CartPoleParams")
      .def(py::init<>())
      .def_readwrite("gravity", &CartPoleParams::gravity)
      .def_readwrite("mass_cart", &CartPoleParams::mass_cart)
      .def_readwrite("mass_pole", &CartPoleParams::mass_pole)
      .def_readwrite("half_length", &CartPoleParams::half_length)
      .def_readwrite("force_mag", &CartPoleParams::force_mag)
      .def_readwrite("tau", &CartPoleParams::tau)
      .def_readwrite("theta_threshold", &CartPoleParams::theta_threshold)
      .def_readwrite("x_threshold", &CartPoleParams::x_threshold)
      .def_readwrite("max_steps", &CartPoleParams::max_steps)
      .def("validate", &CartPoleParams::validate);

  py::class_<EnvState>(mod, "EnvState")
      .def(py::init<>())
      .def_readwrite("s", &EnvState::s)
      .def_readwrite("steps", &EnvState::steps)
      .def_readwrite("done", &EnvState::done);

  mod.def("cartpole_reset",
          [](const CartPoleParams& params, std::uint64_t seed) {
            return cartpole_reset(params, seed);
          },
          py::arg("params"), py::arg("seed"));
  mod.def("cartpole_step", &cartpole_step, py::arg("state"), py::arg("action"),
          py::arg("params"), "One Euler step; returns (new_state, cost)");

  py::class_<EpisodeResult::Step>(mod, "EpisodeStep")
      .def_readonly("x", &EpisodeResult::Step::x)
      .def_readonly("action", &EpisodeResult::Step::action)
      .def_readonly("cost", &EpisodeResult::Step::cost)
      .def_readonly("y", &EpisodeResult::Step::y)
      .def_readonly("terminal", &EpisodeResult::Step::terminal);

  py::class_<EpisodeResult>(mod, "EpisodeResult")
      .def_readonly("survived_steps", &EpisodeResult::survived_steps)
      .def_readonly("total_cost", &EpisodeResult::total_cost)
      .def_readonly("transitions", &EpisodeResult::transitions);

  mod.def("run_episode",
          [](const DenseNet& actor, const CartPoleParams& params, std::uint64_t seed,
             int max_steps, const std::string& mode) {
            return run_episode(make_policy_sampler(actor, parse_mode(mode)), params, seed,
                               max_steps);
          },
          py::arg("actor"), py::arg("params"), py::arg("seed"), py::arg("max_steps") = 200,
          py::arg("mode") = "greedy");

  // ---- training ----

  py::class_<TrainRecord>(mod, "TrainRecord")
      .def_readonly("step", &TrainRecord::step)
      .def_readonly("episode_return", &TrainRecord::episode_return)
      .def_readonly("mean_e", &TrainRecord::mean_e)
      .def_readonly("lam", &TrainRecord::lambda)
      .def_readonly("mean_kappa", &TrainRecord::mean_kappa)
      .def_readonly("critic_loss", &TrainRecord::critic_loss);

  py::class_<TrainConfig>(mod, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("gamma", &TrainConfig::gamma)
      .def_readwrite("delta", &TrainConfig::delta)
      .def_readwrite("order_p", &TrainConfig::order_p)
      .def_readwrite("m", &TrainConfig::m)
      .def_readwrite("n", &TrainConfig::n)
      .def_readwrite("beta1", &TrainConfig::beta1)
      .def_readwrite("beta2", &TrainConfig::beta2)
      .def_readwrite("beta3", &TrainConfig::beta3)
      .def_readwrite("beta4", &TrainConfig::beta4)
      .def_readwrite("lambda_init", &TrainConfig::lambda_init)
      .def_readwrite("lambda_carry", &TrainConfig::lambda_carry)
      .def_readwrite("z_steps", &TrainConfig::z_steps)
      .def_readwrite("total_steps", &TrainConfig::total_steps)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("robust", &TrainConfig::robust)
      .def_readwrite("terminal_rule", &TrainConfig::terminal_rule)
      .def_readwrite("closed_form", &TrainConfig::closed_form)
      .def_readwrite("paper_sign", &TrainConfig::paper_sign)
      .def_readwrite("z_init_offset", &TrainConfig::z_init_offset)
      .def_readwrite("z_clip", &TrainConfig::z_clip)
      .def_readwrite("hidden_sizes", &TrainConfig::hidden_sizes)
      .def_readwrite("log_interval", &TrainConfig::log_interval);

  py::class_<TrainResult>(mod, "TrainResult")
      .def_readonly("actor", &TrainResult::actor)
      .def_readonly("critic", &TrainResult::critic)
      .def_readonly("log", &TrainResult::log)
      .def_readonly("episodes", &TrainResult::episodes);

  mod.def("wraac_train",
          [](const TrainConfig& cfg, const CartPoleParams& params) {
            py::gil_scoped_release release;
            return wraac_train(cfg, params);
          },
          py::arg("config"), py::arg("env_params"),
          "Robust actor-critic run against pole balancing");
  mod.def("a2c_train",
          [](const TrainConfig& cfg, const CartPoleParams& params) {
            py::gil_scoped_release release;
            return a2c_train(cfg, params);
          },
          py::arg("config"), py::arg("env_params"), "Classical baseline, same draw order");

  // ---- evaluation ----

  py::class_<EvalStats>(mod, "EvalStats")
      .def_readonly("mean", &EvalStats::mean)
      .def_readonly("std_dev", &EvalStats::std_dev)
      .def_readonly("episodes", &EvalStats::episodes);

  mod.def("evaluate_episodes",
          [](const DenseNet& actor, const CartPoleParams& params, int episodes,
             std::uint64_t seed_base, const std::string& mode) {
            py::gil_scoped_release release;
            return evaluate_episodes(actor, params, episodes, seed_base, parse_mode(mode));
          },
          py::arg("actor"), py::arg("env_params"), py::arg("episodes"), py::arg("seed_base"),
          py::arg("mode") = "stochastic", "Survived steps per episode, seeds seed_base + i");
  mod.def("evaluate_policy",
          [](const DenseNet& actor, const CartPoleParams& params, int episodes,
             std::uint64_t seed_base, const std::string& mode) {
            py::gil_scoped_release release;
            return evaluate_policy(actor, params, episodes, seed_base, parse_mode(mode));
          },
          py::arg("actor"), py::arg("env_params"), py::arg("episodes"), py::arg("seed_base"),
          py::arg("mode") = "stochastic");
}
