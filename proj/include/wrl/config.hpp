#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wrl/cartpole.hpp"
#include "wrl/train.hpp"

namespace wrl {

/**
 * Everything a run needs, loadable from one JSON file. Field validation
 * is delegated to the owning modules (TrainConfig, CartPoleParams,
 * SweepSpec), so the file format cannot drift from the constructors.
 * Unknown keys are rejected.
 */
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_root;             // empty: WRL_OUT_ROOT env var, then "runs"
  std::string algorithm = "wraac";  // wraac | a2c
  TrainConfig train;                // train.seed / train.robust mirror the fields above
  long checkpoint_interval = 0;     // extra checkpoints every this many steps; 0 = final only
  CartPoleParams env;

  std::string sweep_parameter = "force_mag";
  std::vector<double> sweep_grid;  // empty: the parameter's default grid
  int sweep_episodes = 100;
  std::uint64_t sweep_seed_base = 0;
  std::string sweep_mode = "stochastic";  // stochastic | greedy
  std::vector<std::pair<std::string, std::string>> sweep_policies;  // (name, checkpoint path)

  void validate() const;
};

// Baseline for every load: like RunConfig{} but with the reference
// z-init offset (0, 1/sqrt(26), 0, 5/sqrt(26)) filled in, since the CLI
// always trains on the 4-dimensional cart state. Write "z_init_offset":
// [] to start the ascent at y instead.
RunConfig default_run_config();

RunConfig parse_run_config(const std::string& json_text, const std::string& origin);
RunConfig load_run_config(const std::string& path);

// Full snapshot with every field materialized, keys sorted, stable
// bytes: reloading it reproduces the run exactly.
std::string canonical_config_json(const RunConfig& cfg);

// 8 hex digits identifying the canonical snapshot.
std::string config_digest(const RunConfig& cfg);

// Out root precedence: explicit flag, config value, WRL_OUT_ROOT, "runs".
std::string resolve_out_root(const RunConfig& cfg, const std::string& flag_value);

// Creates <root>/<UTC stamp>-<digest>[-k] and returns it; k disambiguates
// same-second launches of the same config.
std::string make_run_dir(const std::string& root, const RunConfig& cfg);

}  // namespace wrl
