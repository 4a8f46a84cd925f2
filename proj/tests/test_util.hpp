#pragma once

#include <cmath>

#include "sqt/env.hpp"
#include "sqt/rng.hpp"

namespace sqt::testutil {

// Dense random MDP: every row a normalized positive vector, rewards
// uniform in [-1, 1], no terminal states.
inline TabularMDP random_mdp(Rng& rng, int n_states, int n_actions,
                             double gamma) {
  TabularMDP mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  mdp.start_state = 0;
  const std::size_t ns = n_states, na = n_actions;
  mdp.transition.assign(ns * na * ns, 0.0);
  mdp.reward_mean.assign(ns * na, 0.0);
  mdp.reward_std.assign(ns * na, 0.0);
  mdp.action_count.assign(ns, n_actions);
  mdp.terminal.assign(ns, false);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        const double w = -std::log1p(-rng.uniform01());
        mdp.p(s, a, s2) = w;
        sum += w;
      }
      double acc = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        mdp.p(s, a, s2) /= sum;
        acc += mdp.p(s, a, s2);
      }
      // Force the row to sum to one exactly.
      mdp.p(s, a, n_states - 1) += 1.0 - acc;
      mdp.reward_mean[s * na + a] = rng.uniform(-1.0, 1.0);
    }
  return mdp;
}

// One state, one action, terminal transition with the given reward.
inline TabularMDP single_step_mdp(double reward, double gamma = 0.9) {
  TabularMDP mdp;
  mdp.n_states = 2;
  mdp.n_actions = 1;
  mdp.gamma = gamma;
  mdp.start_state = 0;
  mdp.transition.assign(4, 0.0);
  mdp.reward_mean.assign(2, 0.0);
  mdp.reward_std.assign(2, 0.0);
  mdp.action_count = {1, 1};
  mdp.terminal = {false, true};
  mdp.p(0, 0, 1) = 1.0;
  mdp.reward_mean[0] = reward;
  return mdp;
}

// s0 -> s1 -> terminal, reward 1 on each hop.
inline TabularMDP chain2_mdp(double gamma) {
  TabularMDP mdp;
  mdp.n_states = 3;
  mdp.n_actions = 1;
  mdp.gamma = gamma;
  mdp.start_state = 0;
  mdp.transition.assign(9, 0.0);
  mdp.reward_mean.assign(3, 0.0);
  mdp.reward_std.assign(3, 0.0);
  mdp.action_count = {1, 1, 1};
  mdp.terminal = {false, false, true};
  mdp.p(0, 0, 1) = 1.0;
  mdp.p(1, 0, 2) = 1.0;
  mdp.reward_mean[0] = 1.0;
  mdp.reward_mean[1] = 1.0;
  return mdp;
}

}  // namespace sqt::testutil
