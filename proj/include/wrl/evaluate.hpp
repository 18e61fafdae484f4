#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wrl/cartpole.hpp"
#include "wrl/net.hpp"

namespace wrl {

enum class EvalMode { Stochastic, Greedy };

// Action chooser backed by a softmax policy net. Stochastic samples the
// distribution; greedy takes the largest probability (smallest index on
// ties) and consumes no randomness.
ActionSampler make_policy_sampler(const DenseNet& actor, EvalMode mode);

// Survived steps of `episodes` independent episodes, seeds seed_base,
// seed_base+1, ..., in order.
std::vector<int> evaluate_episodes(const DenseNet& actor, const CartPoleParams& env_params,
                                   int episodes, std::uint64_t seed_base, EvalMode mode);

struct EvalStats {
  double mean = 0.0;
  double std_dev = 0.0;  // population (divide by n)
  int episodes = 0;
};

EvalStats evaluate_policy(const DenseNet& actor, const CartPoleParams& env_params, int episodes,
                          std::uint64_t seed_base, EvalMode mode);

EvalStats stats_of(const std::vector<int>& counts);

// The two sweepable dynamics parameters and their default grids.
std::vector<double> default_grid(const std::string& parameter);
CartPoleParams with_parameter(CartPoleParams base, const std::string& parameter, double value);

struct SweepSpec {
  std::string parameter = "force_mag";  // force_mag or mass_pole
  std::vector<double> grid;             // empty: default_grid(parameter)
  int episodes_per_point = 100;
  std::uint64_t seed_base = 0;
  EvalMode mode = EvalMode::Stochastic;
  CartPoleParams base_params;

  struct Policy {
    std::string name;
    DenseNet actor = DenseNet::zeros({1, 1}, OutputHead::Softmax);
  };
  std::vector<Policy> policies;

  void validate() const;
};

struct SweepRow {
  std::string policy;
  std::string parameter;
  double value = 0.0;
  double mean = 0.0;
  double std_dev = 0.0;
  int episodes = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // policy-major, grid order within policy
  std::uint64_t seed_base = 0;
  int episodes_per_point = 0;
  std::string mode;
  int max_steps = 200;  // y-axis cap for the plots
};

// Evaluates every (policy, grid value) cell. Cells run in parallel, each
// with its own environment and seed set; rows come back in a fixed order
// independent of scheduling.
SweepReport run_sweep(const SweepSpec& spec);

/**
 * Writes sweep.csv (policy,parameter,value,mean,std,n) and, per distinct
 * parameter, sweep_<parameter>.svg with one mean curve per policy and a
 * shaded band of one standard deviation around it. Output bytes are a
 * pure function of the report. Returns the written paths.
 */
std::vector<std::string> emit_report(const SweepReport& report, const std::string& out_dir);

}  // namespace wrl
