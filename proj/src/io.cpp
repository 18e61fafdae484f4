#include "wrl/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace wrl {

namespace {

// Reading and parsing problems; see ParseError in the header.
[[noreturn]] void fail(const std::string& msg) { throw ParseError(msg); }

[[noreturn]] void fail_write(const std::string& msg) { throw std::runtime_error(msg); }

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::string tok;
  for (char c : line) {
    if (c == '#') break;
    if (c == ' ' || c == '\t' || c == '\r') {
      if (!tok.empty()) out.push_back(std::move(tok));
      tok.clear();
    } else {
      tok.push_back(c);
    }
  }
  if (!tok.empty()) out.push_back(std::move(tok));
  return out;
}

long parse_long(const std::string& text, const std::string& where) {
  long v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size())
    fail(where + ": expected an integer, got '" + text + "'");
  return v;
}

double parse_double_at(const std::string& text, const std::string& where) {
  try {
    return parse_double(text);
  } catch (const std::exception& e) {
    fail(where + ": " + e.what());
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) fail_write("format_double: conversion failed");
  return std::string(buf, p);
}

std::string format_double_hex(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  if (ec != std::errc()) fail_write("format_double_hex: conversion failed");
  std::string digits(buf, p);
  if (!digits.empty() && digits[0] == '-') return "-0x" + digits.substr(1);
  return "0x" + digits;
}

double parse_double(const std::string& text) {
  if (text.empty()) fail("parse_double: empty token");
  std::string_view sv(text);
  bool neg = false;
  if (sv.front() == '-' || sv.front() == '+') {
    neg = sv.front() == '-';
    sv.remove_prefix(1);
  }
  double v = 0.0;
  std::from_chars_result r{};
  if (sv.size() > 2 && sv[0] == '0' && (sv[1] == 'x' || sv[1] == 'X')) {
    sv.remove_prefix(2);
    r = std::from_chars(sv.data(), sv.data() + sv.size(), v, std::chars_format::hex);
  } else {
    r = std::from_chars(sv.data(), sv.data() + sv.size(), v);
  }
  if (r.ec != std::errc() || r.ptr != sv.data() + sv.size())
    fail("parse_double: bad number '" + text + "'");
  return neg ? -v : v;
}

std::string fnv1a_hex8(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  const std::uint32_t folded = static_cast<std::uint32_t>(h ^ (h >> 32));
  static const char* digits = "0123456789abcdef";
  std::string out(8, '0');
  for (int i = 7; i >= 0; --i) out[i] = digits[(folded >> (4 * (7 - i))) & 0xf];
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) fail("read error on " + path);
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_write("cannot write " + path);
  out << content;
  out.flush();
  if (!out) fail_write("write error on " + path);
}

FiniteMDP parse_mdp_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;

  int n_states = -1;
  double gamma = -1.0, c_bar = -1.0;
  std::vector<double> states;
  std::vector<int> action_counts;
  std::vector<std::vector<std::pair<bool, double>>> costs;       // [x][a] -> (set, value)
  std::vector<std::vector<std::pair<bool, std::vector<double>>>> probs;

  auto where = [&]() { return origin + " line " + std::to_string(lineno); };
  auto need_states = [&]() {
    if (n_states < 0) fail(where() + ": n_states must come before this directive");
  };
  auto state_index = [&](const std::string& tok) {
    const long x = parse_long(tok, where());
    if (x < 0 || x >= n_states) fail(where() + ": state index " + tok + " out of range");
    return static_cast<int>(x);
  };
  auto action_index = [&](int x, const std::string& tok) {
    const long a = parse_long(tok, where());
    if (action_counts[x] == 0)
      fail(where() + ": actions for state " + std::to_string(x) + " not declared yet");
    if (a < 0 || a >= action_counts[x]) fail(where() + ": action index " + tok + " out of range");
    return static_cast<int>(a);
  };

  while (std::getline(in, line)) {
    ++lineno;
    const std::vector<std::string> tok = tokenize(line);
    if (tok.empty()) continue;
    const std::string& key = tok[0];
    if (key == "n_states") {
      if (tok.size() != 2) fail(where() + ": n_states takes one value");
      if (n_states >= 0) fail(where() + ": duplicate n_states");
      const long n = parse_long(tok[1], where());
      if (n < 1) fail(where() + ": n_states must be >= 1");
      n_states = static_cast<int>(n);
      action_counts.assign(n_states, 0);
      costs.resize(n_states);
      probs.resize(n_states);
    } else if (key == "gamma") {
      if (tok.size() != 2) fail(where() + ": gamma takes one value");
      gamma = parse_double_at(tok[1], where());
    } else if (key == "c_bar") {
      if (tok.size() != 2) fail(where() + ": c_bar takes one value");
      c_bar = parse_double_at(tok[1], where());
    } else if (key == "states") {
      need_states();
      if (static_cast<int>(tok.size()) != n_states + 1)
        fail(where() + ": states needs exactly n_states values");
      states.clear();
      for (int i = 0; i < n_states; ++i) states.push_back(parse_double_at(tok[i + 1], where()));
    } else if (key == "actions") {
      need_states();
      if (tok.size() != 3) fail(where() + ": actions takes a state and a count");
      const int x = state_index(tok[1]);
      const long k = parse_long(tok[2], where());
      if (k < 1) fail(where() + ": action count must be >= 1");
      if (action_counts[x] != 0) fail(where() + ": duplicate actions line for state " + tok[1]);
      action_counts[x] = static_cast<int>(k);
      costs[x].assign(k, {false, 0.0});
      probs[x].assign(k, {false, {}});
    } else if (key == "cost") {
      need_states();
      if (tok.size() != 4) fail(where() + ": cost takes state, action, value");
      const int x = state_index(tok[1]);
      const int a = action_index(x, tok[2]);
      if (costs[x][a].first) fail(where() + ": duplicate cost for (" + tok[1] + ", " + tok[2] + ")");
      costs[x][a] = {true, parse_double_at(tok[3], where())};
    } else if (key == "prob") {
      need_states();
      if (static_cast<int>(tok.size()) != n_states + 3)
        fail(where() + ": prob takes state, action, then n_states probabilities");
      const int x = state_index(tok[1]);
      const int a = action_index(x, tok[2]);
      if (probs[x][a].first) fail(where() + ": duplicate prob for (" + tok[1] + ", " + tok[2] + ")");
      std::vector<double> row;
      for (int i = 0; i < n_states; ++i) row.push_back(parse_double_at(tok[i + 3], where()));
      probs[x][a] = {true, std::move(row)};
    } else {
      fail(where() + ": unknown directive '" + key + "'");
    }
  }

  const std::string head = origin + ": ";
  if (n_states < 0) fail(head + "missing n_states");
  if (gamma < 0.0) fail(head + "missing gamma");
  if (c_bar < 0.0) fail(head + "missing c_bar");
  if (states.empty()) fail(head + "missing states");
  FiniteMDP mdp;
  mdp.gamma = gamma;
  mdp.c_bar = c_bar;
  mdp.states = std::move(states);
  mdp.transition.resize(n_states);
  mdp.cost.resize(n_states);
  for (int x = 0; x < n_states; ++x) {
    if (action_counts[x] == 0) fail(head + "state " + std::to_string(x) + " has no actions line");
    for (int a = 0; a < action_counts[x]; ++a) {
      if (!costs[x][a].first)
        fail(head + "missing cost for (" + std::to_string(x) + ", " + std::to_string(a) + ")");
      if (!probs[x][a].first)
        fail(head + "missing prob for (" + std::to_string(x) + ", " + std::to_string(a) + ")");
      mdp.cost[x].push_back(costs[x][a].second);
      mdp.transition[x].push_back(probs[x][a].second);
    }
  }
  try {
    mdp.validate();
  } catch (const std::exception& e) {
    fail(head + e.what());
  }
  return mdp;
}

FiniteMDP read_mdp(const std::string& path) {
  return parse_mdp_text(read_text_file(path), path);
}

void write_mdp(const FiniteMDP& mdp, const std::string& path) {
  mdp.validate();
  std::ostringstream os;
  const int n = mdp.state_count();
  os << "n_states " << n << "\n";
  os << "gamma " << format_double(mdp.gamma) << "\n";
  os << "c_bar " << format_double(mdp.c_bar) << "\n";
  os << "states";
  for (double s : mdp.states) os << " " << format_double(s);
  os << "\n";
  for (int x = 0; x < n; ++x) os << "actions " << x << " " << mdp.action_count(x) << "\n";
  for (int x = 0; x < n; ++x) {
    for (int a = 0; a < mdp.action_count(x); ++a) {
      os << "cost " << x << " " << a << " " << format_double(mdp.cost[x][a]) << "\n";
      os << "prob " << x << " " << a;
      for (double p : mdp.transition[x][a]) os << " " << format_double(p);
      os << "\n";
    }
  }
  write_text_file(path, os.str());
}

void write_solution(const RobustSolution& sol, const std::string& path) {
  std::ostringstream os;
  os << "converged " << (sol.converged ? 1 : 0) << "\n";
  os << "iterations " << sol.iterations << "\n";
  os << "residual " << format_double(sol.residual) << "\n";
  os << "value";
  for (double v : sol.value) os << " " << format_double(v);
  os << "\n";
  os << "policy";
  for (int a : sol.policy) os << " " << a;
  os << "\n";
  for (std::size_t x = 0; x < sol.lambda_star.size(); ++x)
    for (std::size_t a = 0; a < sol.lambda_star[x].size(); ++a)
      os << "lambda " << x << " " << a << " " << format_double(sol.lambda_star[x][a]) << "\n";
  write_text_file(path, os.str());
}

RobustSolution read_solution(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  int lineno = 0;
  RobustSolution sol;
  auto where = [&]() { return path + " line " + std::to_string(lineno); };
  while (std::getline(in, line)) {
    ++lineno;
    const std::vector<std::string> tok = tokenize(line);
    if (tok.empty()) continue;
    const std::string& key = tok[0];
    if (key == "converged" && tok.size() == 2) {
      sol.converged = parse_long(tok[1], where()) != 0;
    } else if (key == "iterations" && tok.size() == 2) {
      sol.iterations = static_cast<int>(parse_long(tok[1], where()));
    } else if (key == "residual" && tok.size() == 2) {
      sol.residual = parse_double_at(tok[1], where());
    } else if (key == "value") {
      sol.value.clear();
      for (std::size_t i = 1; i < tok.size(); ++i)
        sol.value.push_back(parse_double_at(tok[i], where()));
    } else if (key == "policy") {
      sol.policy.clear();
      for (std::size_t i = 1; i < tok.size(); ++i)
        sol.policy.push_back(static_cast<int>(parse_long(tok[i], where())));
    } else if (key == "lambda" && tok.size() == 4) {
      const long x = parse_long(tok[1], where());
      const long a = parse_long(tok[2], where());
      if (x < 0 || a < 0) fail(where() + ": negative index");
      if (static_cast<std::size_t>(x) >= sol.lambda_star.size())
        sol.lambda_star.resize(x + 1);
      if (static_cast<std::size_t>(a) >= sol.lambda_star[x].size())
        sol.lambda_star[x].resize(a + 1, 0.0);
      sol.lambda_star[x][a] = parse_double_at(tok[3], where());
    } else {
      fail(where() + ": unknown directive '" + key + "'");
    }
  }
  return sol;
}

void save_checkpoint(const DenseNet& net, const std::string& kind, const std::string& path) {
  std::ostringstream os;
  os << "kind " << kind << "\n";
  os << "head " << (net.head() == OutputHead::Linear ? "linear" : "softmax") << "\n";
  os << "layers";
  for (int s : net.layer_sizes()) os << " " << s;
  os << "\n";
  for (double p : net.params()) os << "param " << format_double_hex(p) << "\n";
  write_text_file(path, os.str());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  int lineno = 0;
  std::string kind;
  std::string head_name;
  std::vector<int> sizes;
  std::vector<double> params;
  auto where = [&]() { return path + " line " + std::to_string(lineno); };
  while (std::getline(in, line)) {
    ++lineno;
    const std::vector<std::string> tok = tokenize(line);
    if (tok.empty()) continue;
    const std::string& key = tok[0];
    if (key == "kind" && tok.size() == 2) {
      kind = tok[1];
    } else if (key == "head" && tok.size() == 2) {
      head_name = tok[1];
    } else if (key == "layers") {
      for (std::size_t i = 1; i < tok.size(); ++i) {
        const long s = parse_long(tok[i], where());
        if (s < 1) fail(where() + ": layer sizes must be >= 1");
        sizes.push_back(static_cast<int>(s));
      }
    } else if (key == "param" && tok.size() == 2) {
      params.push_back(parse_double_at(tok[1], where()));
    } else {
      fail(where() + ": unknown directive '" + key + "'");
    }
  }
  if (sizes.size() < 2) fail(path + ": missing or short layers line");
  OutputHead head;
  if (head_name == "linear") {
    head = OutputHead::Linear;
  } else if (head_name == "softmax") {
    head = OutputHead::Softmax;
  } else {
    fail(path + ": head must be linear or softmax, got '" + head_name + "'");
  }
  Checkpoint cp;
  cp.kind = kind;
  cp.net = DenseNet::zeros(sizes, head);
  if (static_cast<int>(params.size()) != cp.net.param_count())
    fail(path + ": expected " + std::to_string(cp.net.param_count()) + " params, got " +
         std::to_string(params.size()));
  cp.net.set_params(params);
  return cp;
}

void write_training_csv(const std::vector<TrainRecord>& log, const std::string& path) {
  std::ostringstream os;
  os << "step,episode_return,mean_e,lambda,mean_kappa,critic_loss\n";
  for (const TrainRecord& r : log) {
    os << r.step << "," << format_double(r.episode_return) << "," << format_double(r.mean_e)
       << "," << format_double(r.lambda) << "," << format_double(r.mean_kappa) << ","
       << format_double(r.critic_loss) << "\n";
  }
  write_text_file(path, os.str());
}

void write_trajectory_csv(const EpisodeResult& episode, const std::string& path) {
  std::ostringstream os;
  os << "step,x,x_dot,theta,theta_dot,action,cost,done\n";
  for (std::size_t i = 0; i < episode.transitions.size(); ++i) {
    const auto& t = episode.transitions[i];
    os << i;
    for (double c : t.x) os << "," << format_double(c);
    os << "," << t.action << "," << format_double(t.cost) << "," << (t.terminal ? 1 : 0)
       << "\n";
  }
  write_text_file(path, os.str());
}

}  // namespace wrl
