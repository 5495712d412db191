#pragma once

#include "phasedpg/optimizer.hpp"
#include "phasedpg/regret.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace phasedpg {

using Json = nlohmann::ordered_json;

/// {"num_states", "num_actions", "gamma", "rho", "rewards", "transitions"}.
/// Doubles are written in shortest round-trip form, so a read/write cycle
/// reproduces the file bit for bit.
Json mdp_to_json(const Mdp& m);
Mdp mdp_from_json(const Json& j);
Mdp load_mdp(const std::filesystem::path& path);
void save_mdp(const Mdp& m, const std::filesystem::path& path);

/// {"shape": [S, A], "data": [row-major theta]}.
Json params_to_json(const PolicyParams& params);
PolicyParams params_from_json(const Json& j);

/// One JSONL line: seed, l, k, i, states, actions, rewards.
Json trajectory_to_json(const SeedSpec& seed, const Trajectory& traj);

Json episode_to_json(const EpisodeLog& log);

/// Header: n,l,k,H,gap,cumulative_regret,average_regret[,episodes,minibatch_regret].
void write_regret_csv(std::ostream& os, const RegretLedger& ledger);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const Json& j, const std::filesystem::path& path, int indent = 2);

}  // namespace phasedpg
