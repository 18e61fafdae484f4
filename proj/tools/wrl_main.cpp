// wrl: solve / train / sweep / verify entry points over one binary.
//
// Exit codes: 0 success, 1 bad input (flags, files, config validation),
// 2 runtime failure (divergence, unwritable output), 3 solver ran out of
// iterations before reaching tolerance.

#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "wrl/cartpole.hpp"
#include "wrl/config.hpp"
#include "wrl/environment.hpp"
#include "wrl/evaluate.hpp"
#include "wrl/io.hpp"
#include "wrl/mdp.hpp"
#include "wrl/net.hpp"
#include "wrl/robust_bellman.hpp"
#include "wrl/train.hpp"
#include "wrl/verify.hpp"

namespace {

struct SolveArgs {
  std::string mdp_path;
  double delta = 0.0;
  double order_p = 1.0;
  double tol = 1e-8;
  long max_iter = 100000;
  std::string out;
};

struct TrainArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  double delta = 0.0;
  bool delta_set = false;
  double order_p = 0.0;
  bool order_p_set = false;
  std::string robust;  // "", "on", "off"
  long steps = 0;
  bool steps_set = false;
};

struct SweepArgs {
  std::string config_path;
  std::string parameter;
  std::string grid_csv;
  int episodes = 0;
  bool episodes_set = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::vector<std::string> checkpoints;  // name=path or bare path
};

std::vector<double> parse_grid_csv(const std::string& csv) {
  std::vector<double> grid;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) throw std::invalid_argument("--grid has an empty entry");
    grid.push_back(wrl::parse_double(cell));
  }
  if (grid.empty()) throw std::invalid_argument("--grid is empty");
  return grid;
}

// "name=path" or bare path (stem becomes the name).
std::pair<std::string, std::string> split_policy_arg(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) {
    return {std::filesystem::path(arg).stem().string(), arg};
  }
  std::string name = arg.substr(0, eq);
  std::string path = arg.substr(eq + 1);
  if (name.empty() || path.empty()) {
    throw std::invalid_argument("bad checkpoint argument '" + arg + "', expected name=path");
  }
  return {std::move(name), std::move(path)};
}

void print_warnings(const wrl::TrainConfig& cfg) {
  for (const std::string& w : cfg.warnings()) std::cerr << "warning: " << w << "\n";
}

int run_solve(const SolveArgs& args) {
  const wrl::FiniteMDP mdp = wrl::read_mdp(args.mdp_path);
  wrl::WassersteinBall ball;
  ball.order_p = args.order_p;
  ball.delta = args.delta;
  ball.validate();
  wrl::SolveOptions opts;
  opts.tol = args.tol;
  opts.max_iter = args.max_iter;
  if (opts.tol <= 0.0) throw std::invalid_argument("--tol must be positive");
  if (opts.max_iter < 1) throw std::invalid_argument("--max-iter must be at least 1");

  const wrl::RobustSolution sol = wrl::solve_value_iteration(mdp, ball, opts);

  const std::string out = args.out.empty() ? args.mdp_path + ".solution" : args.out;
  wrl::write_solution(sol, out);

  std::cout << (sol.converged ? "converged" : "NOT converged") << " after " << sol.iterations
            << " iterations, residual " << wrl::format_double(sol.residual) << "\n";
  for (std::size_t x = 0; x < sol.value.size(); ++x) {
    std::cout << "state " << x << ": value " << wrl::format_double(sol.value[x]) << ", action "
              << sol.policy[x] << ", penalty "
              << wrl::format_double(sol.lambda_star[x][static_cast<std::size_t>(sol.policy[x])])
              << "\n";
  }
  std::cout << "wrote " << out << "\n";
  return sol.converged ? 0 : 3;
}

int run_train(const TrainArgs& args) {
  wrl::RunConfig cfg = args.config_path.empty() ? wrl::default_run_config()
                                                : wrl::load_run_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (args.delta_set) cfg.train.delta = args.delta;
  if (args.order_p_set) cfg.train.order_p = args.order_p;
  if (!args.robust.empty()) cfg.algorithm = args.robust == "on" ? "wraac" : "a2c";
  if (args.steps_set) cfg.train.total_steps = args.steps;
  cfg.train.seed = cfg.seed;
  cfg.train.robust = cfg.algorithm == "wraac";
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  print_warnings(cfg.train);

  const std::string root = wrl::resolve_out_root(cfg, args.out);
  const std::string dir = wrl::make_run_dir(root, cfg);
  wrl::write_text_file(dir + "/config.json", wrl::canonical_config_json(cfg));

  const auto t0 = std::chrono::steady_clock::now();
  wrl::CartPoleEnv env(cfg.env);
  wrl::TrainHooks hooks;
  hooks.checkpoint_interval = cfg.checkpoint_interval;
  hooks.snapshot = [&dir](long step, const wrl::DenseNet& actor, const wrl::DenseNet& critic) {
    wrl::save_checkpoint(actor, "actor", dir + "/actor_" + std::to_string(step) + ".ckpt");
    wrl::save_checkpoint(critic, "critic", dir + "/critic_" + std::to_string(step) + ".ckpt");
  };
  const wrl::TrainResult res = wrl::train_loop(cfg.train, env, hooks);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  wrl::write_training_csv(res.log, dir + "/training.csv");
  wrl::save_checkpoint(res.actor, "actor", dir + "/actor.ckpt");
  wrl::save_checkpoint(res.critic, "critic", dir + "/critic.ckpt");

  // One greedy rollout of the final policy, for eyeballing a run without
  // loading anything.
  const wrl::EpisodeResult episode =
      wrl::run_episode(wrl::make_policy_sampler(res.actor, wrl::EvalMode::Greedy), cfg.env,
                       cfg.seed, cfg.env.max_steps);
  wrl::write_trajectory_csv(episode, dir + "/trajectory.csv");

  std::ostringstream manifest;
  manifest << "algorithm " << cfg.algorithm << "\n"
           << "seed " << cfg.seed << "\n"
           << "config_digest " << wrl::config_digest(cfg) << "\n"
           << "total_steps " << res.steps << "\n"
           << "episodes " << res.episodes << "\n"
           << "final_greedy_steps " << episode.survived_steps << "\n"
           << "wall_seconds " << wrl::format_double(wall) << "\n"
           << "compiler " << __VERSION__ << "\n";
  wrl::write_text_file(dir + "/manifest.txt", manifest.str());

  if (!res.log.empty()) {
    const wrl::TrainRecord& last = res.log.back();
    std::cout << "trained " << res.steps << " steps, " << res.episodes
              << " episodes, last return " << wrl::format_double(last.episode_return)
              << ", lambda " << wrl::format_double(last.lambda) << "\n";
  }
  std::cout << dir << "\n";
  return 0;
}

int run_sweep(const SweepArgs& args) {
  wrl::RunConfig cfg = args.config_path.empty() ? wrl::default_run_config()
                                                : wrl::load_run_config(args.config_path);
  if (!args.parameter.empty()) cfg.sweep_parameter = args.parameter;
  if (!args.grid_csv.empty()) cfg.sweep_grid = parse_grid_csv(args.grid_csv);
  if (args.episodes_set) cfg.sweep_episodes = args.episodes;
  if (args.seed_set) cfg.sweep_seed_base = args.seed;
  std::vector<std::pair<std::string, std::string>> entries = cfg.sweep_policies;
  for (const std::string& arg : args.checkpoints) entries.push_back(split_policy_arg(arg));
  if (entries.empty()) {
    throw std::invalid_argument("no policies: pass actor checkpoints or list them in the config");
  }
  cfg.sweep_policies = entries;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }

  wrl::SweepSpec spec;
  spec.parameter = cfg.sweep_parameter;
  spec.grid = cfg.sweep_grid;
  spec.episodes_per_point = cfg.sweep_episodes;
  spec.seed_base = cfg.sweep_seed_base;
  spec.mode = cfg.sweep_mode == "greedy" ? wrl::EvalMode::Greedy : wrl::EvalMode::Stochastic;
  spec.base_params = cfg.env;
  for (const auto& [name, path] : entries) {
    wrl::Checkpoint ckpt = wrl::load_checkpoint(path);
    if (ckpt.net.head() != wrl::OutputHead::Softmax) {
      throw wrl::ParseError(path + ": checkpoint is not a policy (head is not softmax)");
    }
    spec.policies.push_back({name, std::move(ckpt.net)});
  }

  const wrl::SweepReport report = wrl::run_sweep(spec);

  const std::string root = wrl::resolve_out_root(cfg, args.out);
  const std::string dir = wrl::make_run_dir(root, cfg);
  wrl::write_text_file(dir + "/config.json", wrl::canonical_config_json(cfg));
  for (const std::string& path : wrl::emit_report(report, dir)) {
    std::cout << "wrote " << path << "\n";
  }
  std::cout << dir << "\n";
  return 0;
}

int run_verify(bool corrupt_gradient) {
  wrl::VerifyOptions opts;
  opts.corrupt_gradient = corrupt_gradient;
  const std::vector<wrl::VerifyCheck> checks = wrl::run_verify(opts);
  std::cout << wrl::verify_table(checks);
  return wrl::verify_passed(checks) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributionally robust actor-critic toolkit"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  CLI::App* solve = app.add_subcommand("solve", "Solve a finite MDP to its robust fixed point");
  solve->add_option("mdp", solve_args.mdp_path, "MDP instance file")->required();
  solve->add_option("--delta", solve_args.delta, "transport budget (default 0)");
  solve->add_option("--order-p", solve_args.order_p, "ground-cost order (default 1)");
  solve->add_option("--tol", solve_args.tol, "sup-norm stopping tolerance");
  solve->add_option("--max-iter", solve_args.max_iter, "iteration cap");
  solve->add_option("--out", solve_args.out, "solution path (default <mdp>.solution)");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train a policy on the cart-pole task");
  train->add_option("--config", train_args.config_path, "run config JSON");
  train->add_option("--seed", train_args.seed, "override the run seed");
  train->add_option("--out", train_args.out, "output root (default runs/)");
  train->add_option("--delta", train_args.delta, "override the transport budget");
  train->add_option("--order-p", train_args.order_p, "override the ground-cost order");
  train->add_option("--robust", train_args.robust, "on: robust trainer, off: classical baseline")
      ->check(CLI::IsMember({"on", "off"}));
  train->add_option("--steps", train_args.steps, "override the step count");

  SweepArgs sweep_args;
  CLI::App* sweep =
      app.add_subcommand("sweep", "Evaluate saved policies across a dynamics parameter");
  sweep->add_option("checkpoints", sweep_args.checkpoints, "actor checkpoints (name=path or path)");
  sweep->add_option("--config", sweep_args.config_path, "run config JSON");
  sweep->add_option("--param", sweep_args.parameter, "force_mag or mass_pole")
      ->check(CLI::IsMember({"force_mag", "mass_pole"}));
  sweep->add_option("--grid", sweep_args.grid_csv, "comma-separated parameter values");
  sweep->add_option("--episodes", sweep_args.episodes, "episodes per grid point");
  sweep->add_option("--seed", sweep_args.seed, "evaluation seed base");
  sweep->add_option("--out", sweep_args.out, "output root (default runs/)");

  bool corrupt_gradient = false;
  CLI::App* verify = app.add_subcommand("verify", "Run the built-in oracle checks");
  verify->add_flag("--corrupt-gradient", corrupt_gradient,
                   "negative control: corrupt one gradient so the check must fail");

  int rc = 0;
  solve->callback([&]() { rc = run_solve(solve_args); });
  train->callback([&]() {
    train_args.seed_set = train->count("--seed") > 0;
    train_args.delta_set = train->count("--delta") > 0;
    train_args.order_p_set = train->count("--order-p") > 0;
    train_args.steps_set = train->count("--steps") > 0;
    rc = run_train(train_args);
  });
  sweep->callback([&]() {
    sweep_args.episodes_set = sweep->count("--episodes") > 0;
    sweep_args.seed_set = sweep->count("--seed") > 0;
    rc = run_sweep(sweep_args);
  });
  verify->callback([&]() { rc = run_verify(corrupt_gradient); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const wrl::TrainDivergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const wrl::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
