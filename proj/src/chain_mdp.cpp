#include "wrl/chain_mdp.hpp"

#include <algorithm>
#include <stdexcept>

namespace wrl {

FiniteMDP make_chain_mdp(const ChainMDPSpec& spec) {
  if (spec.n_states < 2)
    throw std::invalid_argument("make_chain_mdp: need at least two states");
  if (!(spec.slip >= 0.0 && spec.slip <= 1.0))
    throw std::invalid_argument("make_chain_mdp: slip must lie in [0, 1]");
  if (!spec.cost_profile.empty() &&
      static_cast<int>(spec.cost_profile.size()) != spec.n_states)
    throw std::invalid_argument("make_chain_mdp: cost profile length mismatch");

  const int n = spec.n_states;
  FiniteMDP mdp;
  mdp.gamma = spec.gamma;
  mdp.c_bar = spec.c_bar;
  mdp.states.resize(n);
  for (int i = 0; i < n; ++i) mdp.states[i] = static_cast<double>(i);

  std::vector<double> profile = spec.cost_profile;
  if (profile.empty()) {
    profile.assign(n, 0.0);
    profile[n - 1] = 1.0;
  }

  mdp.transition.assign(n, {});
  mdp.cost.assign(n, {});
  for (int x = 0; x < n; ++x) {
    for (int a = 0; a < 2; ++a) {
      const int dir = a == 1 ? 1 : -1;
      const int hit = std::clamp(x + dir, 0, n - 1);
      const int miss = std::clamp(x - dir, 0, n - 1);
      std::vector<double> row(n, 0.0);
      row[hit] += 1.0 - spec.slip;
      row[miss] += spec.slip;
      mdp.transition[x].push_back(std::move(row));
      mdp.cost[x].push_back(profile[x]);
    }
  }
  mdp.validate();
  return mdp;
}

}  // namespace wrl
