#include "wrl/config.hpp"

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "wrl/io.hpp"

namespace wrl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& msg) {
  throw ParseError(origin + ": " + msg);
}

void reject_unknown(const json& obj, const std::vector<std::string>& known,
                    const std::string& origin, const std::string& section) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const std::string& k : known) ok = ok || it.key() == k;
    if (!ok) fail(origin, "unknown key '" + it.key() + "' in " + section);
  }
}

template <typename T>
void get_to(const json& obj, const char* key, T& out, const std::string& origin) {
  if (!obj.contains(key)) return;
  try {
    obj.at(key).get_to(out);
  } catch (const json::exception& e) {
    fail(origin, std::string("bad value for '") + key + "': " + e.what());
  }
}

void parse_train_section(const json& t, RunConfig& cfg, const std::string& origin) {
  reject_unknown(t,
                 {"gamma", "delta", "order_p", "m", "n", "beta1", "beta2", "beta3", "beta4",
                  "lambda_init", "lambda_carry", "z_steps", "total_steps", "terminal_rule",
                  "closed_form", "paper_sign", "z_init_offset", "hidden_sizes", "log_interval",
                  "checkpoint_interval"},
                 origin, "train");
  TrainConfig& tc = cfg.train;
  get_to(t, "gamma", tc.gamma, origin);
  get_to(t, "delta", tc.delta, origin);
  get_to(t, "order_p", tc.order_p, origin);
  get_to(t, "m", tc.m, origin);
  get_to(t, "n", tc.n, origin);
  get_to(t, "beta1", tc.beta1, origin);
  get_to(t, "beta2", tc.beta2, origin);
  get_to(t, "beta3", tc.beta3, origin);
  get_to(t, "beta4", tc.beta4, origin);
  get_to(t, "lambda_init", tc.lambda_init, origin);
  get_to(t, "lambda_carry", tc.lambda_carry, origin);
  get_to(t, "z_steps", tc.z_steps, origin);
  get_to(t, "total_steps", tc.total_steps, origin);
  get_to(t, "terminal_rule", tc.terminal_rule, origin);
  get_to(t, "closed_form", tc.closed_form, origin);
  get_to(t, "paper_sign", tc.paper_sign, origin);
  get_to(t, "z_init_offset", tc.z_init_offset, origin);
  get_to(t, "hidden_sizes", tc.hidden_sizes, origin);
  get_to(t, "log_interval", tc.log_interval, origin);
  get_to(t, "checkpoint_interval", cfg.checkpoint_interval, origin);
}

void parse_env_section(const json& e, CartPoleParams& p, const std::string& origin) {
  reject_unknown(e,
                 {"gravity", "mass_cart", "mass_pole", "half_length", "force_mag", "tau",
                  "theta_threshold", "x_threshold", "max_steps"},
                 origin, "env");
  get_to(e, "gravity", p.gravity, origin);
  get_to(e, "mass_cart", p.mass_cart, origin);
  get_to(e, "mass_pole", p.mass_pole, origin);
  get_to(e, "half_length", p.half_length, origin);
  get_to(e, "force_mag", p.force_mag, origin);
  get_to(e, "tau", p.tau, origin);
  get_to(e, "theta_threshold", p.theta_threshold, origin);
  get_to(e, "x_threshold", p.x_threshold, origin);
  get_to(e, "max_steps", p.max_steps, origin);
}

void parse_sweep_section(const json& s, RunConfig& cfg, const std::string& origin) {
  reject_unknown(s, {"parameter", "grid", "episodes_per_point", "seed_base", "mode", "policies"},
                 origin, "sweep");
  get_to(s, "parameter", cfg.sweep_parameter, origin);
  get_to(s, "grid", cfg.sweep_grid, origin);
  get_to(s, "episodes_per_point", cfg.sweep_episodes, origin);
  get_to(s, "seed_base", cfg.sweep_seed_base, origin);
  get_to(s, "mode", cfg.sweep_mode, origin);
  if (s.contains("policies")) {
    if (!s.at("policies").is_array()) fail(origin, "sweep.policies must be an array");
    for (const json& p : s.at("policies")) {
      if (!p.is_object() || !p.contains("name") || !p.contains("checkpoint"))
        fail(origin, "each sweep policy needs name and checkpoint");
      reject_unknown(p, {"name", "checkpoint"}, origin, "sweep.policies entry");
      std::string name, ckpt;
      get_to(p, "name", name, origin);
      get_to(p, "checkpoint", ckpt, origin);
      cfg.sweep_policies.emplace_back(std::move(name), std::move(ckpt));
    }
  }
}

}  // namespace

void RunConfig::validate() const {
  if (algorithm != "wraac" && algorithm != "a2c")
    throw std::invalid_argument("RunConfig: algorithm must be wraac or a2c");
  if (sweep_mode != "stochastic" && sweep_mode != "greedy")
    throw std::invalid_argument("RunConfig: sweep mode must be stochastic or greedy");
  if (sweep_episodes < 1)
    throw std::invalid_argument("RunConfig: sweep episodes_per_point must be >= 1");
  if (checkpoint_interval < 0)
    throw std::invalid_argument("RunConfig: checkpoint_interval must be >= 0");
  if (sweep_parameter != "force_mag" && sweep_parameter != "mass_pole")
    throw std::invalid_argument("RunConfig: sweep parameter must be force_mag or mass_pole");
  env.validate();
  TrainConfig t = train;
  t.seed = seed;
  t.robust = algorithm == "wraac";
  // 4 is the reference environment's state dimension, the only one the
  // CLI trains on.
  t.validate(4);
}

RunConfig default_run_config() {
  RunConfig cfg;
  const double r = 1.0 / std::sqrt(26.0);
  cfg.train.z_init_offset = {0.0, r, 0.0, 5.0 * r};
  return cfg;
}

RunConfig parse_run_config(const std::string& json_text, const std::string& origin) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(origin, std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) fail(origin, "top level must be an object");
  reject_unknown(root, {"seed", "out", "algorithm", "train", "env", "sweep"}, origin,
                 "the top level");

  RunConfig cfg = default_run_config();
  get_to(root, "seed", cfg.seed, origin);
  get_to(root, "out", cfg.out_root, origin);
  get_to(root, "algorithm", cfg.algorithm, origin);
  if (root.contains("train")) parse_train_section(root.at("train"), cfg, origin);
  if (root.contains("env")) parse_env_section(root.at("env"), cfg.env, origin);
  if (root.contains("sweep")) parse_sweep_section(root.at("sweep"), cfg, origin);

  cfg.train.seed = cfg.seed;
  cfg.train.robust = cfg.algorithm == "wraac";
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    fail(origin, e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text_file(path), path);
}

std::string canonical_config_json(const RunConfig& cfg) {
  json root;
  root["seed"] = cfg.seed;
  root["out"] = cfg.out_root;
  root["algorithm"] = cfg.algorithm;
  json t;
  t["gamma"] = cfg.train.gamma;
  t["delta"] = cfg.train.delta;
  t["order_p"] = cfg.train.order_p;
  t["m"] = cfg.train.m;
  t["n"] = cfg.train.n;
  t["beta1"] = cfg.train.beta1;
  t["beta2"] = cfg.train.beta2;
  t["beta3"] = cfg.train.beta3;
  t["beta4"] = cfg.train.beta4;
  t["lambda_init"] = cfg.train.lambda_init;
  t["lambda_carry"] = cfg.train.lambda_carry;
  t["z_steps"] = cfg.train.z_steps;
  t["total_steps"] = cfg.train.total_steps;
  t["terminal_rule"] = cfg.train.terminal_rule;
  t["closed_form"] = cfg.train.closed_form;
  t["paper_sign"] = cfg.train.paper_sign;
  t["z_init_offset"] = cfg.train.z_init_offset;
  t["hidden_sizes"] = cfg.train.hidden_sizes;
  t["log_interval"] = cfg.train.log_interval;
  t["checkpoint_interval"] = cfg.checkpoint_interval;
  root["train"] = t;
  json e;
  e["gravity"] = cfg.env.gravity;
  e["mass_cart"] = cfg.env.mass_cart;
  e["mass_pole"] = cfg.env.mass_pole;
  e["half_length"] = cfg.env.half_length;
  e["force_mag"] = cfg.env.force_mag;
  e["tau"] = cfg.env.tau;
  e["theta_threshold"] = cfg.env.theta_threshold;
  e["x_threshold"] = cfg.env.x_threshold;
  e["max_steps"] = cfg.env.max_steps;
  root["env"] = e;
  json s;
  s["parameter"] = cfg.sweep_parameter;
  s["grid"] = cfg.sweep_grid;
  s["episodes_per_point"] = cfg.sweep_episodes;
  s["seed_base"] = cfg.sweep_seed_base;
  s["mode"] = cfg.sweep_mode;
  json pols = json::array();
  for (const auto& [name, ckpt] : cfg.sweep_policies)
    pols.push_back(json{{"name", name}, {"checkpoint", ckpt}});
  s["policies"] = pols;
  root["sweep"] = s;
  return root.dump(2) + "\n";
}

std::string config_digest(const RunConfig& cfg) { return fnv1a_hex8(canonical_config_json(cfg)); }

std::string resolve_out_root(const RunConfig& cfg, const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (!cfg.out_root.empty()) return cfg.out_root;
  if (const char* env = std::getenv("WRL_OUT_ROOT"); env && *env) return env;
  return "runs";
}

std::string make_run_dir(const std::string& root, const RunConfig& cfg) {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%dT%H%M%SZ", &tm);
  const std::string base = root + "/" + stamp + "-" + config_digest(cfg);
  std::string dir = base;
  for (int k = 2; std::filesystem::exists(dir); ++k) dir = base + "-" + std::to_string(k);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace wrl
