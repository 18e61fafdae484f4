#pragma once

#include <vector>

#include "wrl/mdp.hpp"

namespace wrl {

/**
 * Synthetic birth-death chain on embeddings 0..n_states-1 with two
 * actions (0 moves left, 1 moves right). The intended move succeeds with
 * probability 1 - slip and is inverted with probability slip; moves off
 * either end stay put. Costs are per-state (action-independent); an
 * empty profile defaults to cost 1 at the rightmost state, 0 elsewhere.
 */
struct ChainMDPSpec {
  int n_states = 5;
  double slip = 0.1;
  std::vector<double> cost_profile;  // empty or n_states entries in [0, c_bar]
  double gamma = 0.9;
  double c_bar = 1.0;
};

FiniteMDP make_chain_mdp(const ChainMDPSpec& spec);

}  // namespace wrl
