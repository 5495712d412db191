#pragma once

#include "phasedpg/mdp.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace phasedpg {

/// S-state chain with two actions. Action 1 advances (the last state loops
/// on itself), action 0 resets to state 0. Advancing in the last state pays
/// 1; resetting from state 0 pays `reset_reward`. rho is uniform.
Mdp make_chain(int num_states, double gamma = 0.9, double reset_reward = 0.1);

/// width x height grid, actions up/right/down/left. A move succeeds with
/// probability 1 - slip and otherwise leaves the agent in place; walls block.
/// The bottom-right cell is absorbing and pays 1 for every action.
Mdp make_gridworld(int width, int height, double gamma = 0.9, double slip = 0.1);

/// Transition rows drawn from a symmetric Dirichlet(1), rewards uniform on
/// [0, 1), rho uniform; fully determined by `seed`.
Mdp make_random(int num_states, int num_actions, double gamma, std::uint64_t seed);

/// Dispatch on name in {chain, gridworld, random} with string parameters.
Mdp make_environment(const std::string& name, const std::map<std::string, std::string>& params);

}  // namespace phasedpg
