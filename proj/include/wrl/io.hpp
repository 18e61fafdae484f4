#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "wrl/mdp.hpp"
#include "wrl/net.hpp"
#include "wrl/train.hpp"

namespace wrl {

// Input-side failure: unreadable file, malformed syntax, or content that
// fails validation. Callers map this to the validation exit path, unlike
// write-side errors which stay plain runtime errors.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest decimal string that round-trips the exact double. Locale
// independent, so files regenerate byte for byte.
std::string format_double(double v);

// Hex-float form, exact by construction. Used by checkpoints.
std::string format_double_hex(double v);

double parse_double(const std::string& text);

// 64-bit FNV-1a of a byte string, rendered as 8 hex digits (folded).
std::string fnv1a_hex8(const std::string& bytes);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/**
 * Finite MDP text format, one directive per line, order-free:
 *
 *   n_states N
 *   gamma G
 *   c_bar C
 *   states v0 v1 ... v{N-1}
 *   actions X K          (state X has K actions)
 *   cost X A V
 *   prob X A p0 ... p{N-1}
 *
 * '#' starts a comment. Every declared (state, action) needs exactly one
 * cost and one prob line. Parse and validation failures carry the line
 * number.
 */
FiniteMDP read_mdp(const std::string& path);
void write_mdp(const FiniteMDP& mdp, const std::string& path);
FiniteMDP parse_mdp_text(const std::string& text, const std::string& origin);

/**
 * Solver output: converged flag, iteration count, residual, the value
 * table, the greedy policy, and one penalty line per (state, action).
 */
void write_solution(const RobustSolution& sol, const std::string& path);
RobustSolution read_solution(const std::string& path);

/**
 * Network checkpoint: kind tag (free-form, e.g. actor/critic), head,
 * layer sizes, then every parameter in flat layout order as hex floats.
 */
struct Checkpoint {
  std::string kind;
  DenseNet net = DenseNet::zeros({1, 1}, OutputHead::Linear);
};

void save_checkpoint(const DenseNet& net, const std::string& kind, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// training.csv: one row per TrainRecord.
void write_training_csv(const std::vector<TrainRecord>& log, const std::string& path);

// One evaluation trajectory: step, x, x_dot, theta, theta_dot, action,
// cost, done.
void write_trajectory_csv(const EpisodeResult& episode, const std::string& path);

}  // namespace wrl
