#include "phasedpg/serialization.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace phasedpg {

namespace {

template <typename T>
T require(const Json& j, const char* key) {
  if (!j.contains(key)) throw InvalidArgument(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

Json mdp_to_json(const Mdp& m) {
  Json j;
  j["num_states"] = m.num_states;
  j["num_actions"] = m.num_actions;
  j["gamma"] = m.discount;
  j["rho"] = std::vector<double>(m.initial_dist.data(), m.initial_dist.data() + m.initial_dist.size());
  Json rewards = Json::array();
  Json transitions = Json::array();
  for (int s = 0; s < m.num_states; ++s) {
    Json reward_row = Json::array();
    Json kernel_rows = Json::array();
    for (int a = 0; a < m.num_actions; ++a) {
      reward_row.push_back(m.rewards(s, a));
      Json next = Json::array();
      for (int n = 0; n < m.num_states; ++n) next.push_back(m.transition(s, a, n));
      kernel_rows.push_back(std::move(next));
    }
    rewards.push_back(std::move(reward_row));
    transitions.push_back(std::move(kernel_rows));
  }
  j["rewards"] = std::move(rewards);
  j["transitions"] = std::move(transitions);
  return j;
}

Mdp mdp_from_json(const Json& j) {
  Mdp m;
  m.num_states = require<int>(j, "num_states");
  m.num_actions = require<int>(j, "num_actions");
  m.discount = require<double>(j, "gamma");
  if (m.num_states <= 0 || m.num_actions <= 0)
    throw InvalidArgument("num_states and num_actions must be positive");
  const auto rho = require<std::vector<double>>(j, "rho");
  const auto rewards = require<std::vector<std::vector<double>>>(j, "rewards");
  const auto transitions = require<std::vector<std::vector<std::vector<double>>>>(j, "transitions");
  const auto S = static_cast<std::size_t>(m.num_states);
  const auto A = static_cast<std::size_t>(m.num_actions);
  if (rho.size() != S) throw InvalidArgument("rho must have num_states entries");
  if (rewards.size() != S) throw InvalidArgument("rewards must have num_states rows");
  if (transitions.size() != S) throw InvalidArgument("transitions must have num_states blocks");

  m.initial_dist = Eigen::Map<const Vector>(rho.data(), m.num_states);
  m.rewards.resize(m.num_states, m.num_actions);
  m.transitions.resize(m.num_states * m.num_actions, m.num_states);
  for (std::size_t s = 0; s < S; ++s) {
    if (rewards[s].size() != A) throw InvalidArgument("rewards row has the wrong length");
    if (transitions[s].size() != A) throw InvalidArgument("transitions block has the wrong length");
    for (std::size_t a = 0; a < A; ++a) {
      m.rewards(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = rewards[s][a];
      if (transitions[s][a].size() != S) throw InvalidArgument("transition row has the wrong length");
      for (std::size_t n = 0; n < S; ++n)
        m.transitions(m.row_index(static_cast<int>(s), static_cast<int>(a)), static_cast<Eigen::Index>(n)) =
            transitions[s][a][n];
    }
  }
  validate_mdp(m);
  return m;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const Json& j, const std::filesystem::path& path, int indent) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(indent) << '\n';
}

Mdp load_mdp(const std::filesystem::path& path) { return mdp_from_json(read_json_file(path)); }

void save_mdp(const Mdp& m, const std::filesystem::path& path) { write_json_file(mdp_to_json(m), path); }

Json params_to_json(const PolicyParams& params) {
  Json j;
  j["shape"] = {params.num_states(), params.num_actions()};
  Json data = Json::array();
  for (int s = 0; s < params.num_states(); ++s)
    for (int a = 0; a < params.num_actions(); ++a) data.push_back(params.theta(s, a));
  j["data"] = std::move(data);
  return j;
}

PolicyParams params_from_json(const Json& j) {
  const auto shape = require<std::vector<int>>(j, "shape");
  const auto data = require<std::vector<double>>(j, "data");
  if (shape.size() != 2 || shape[0] <= 0 || shape[1] <= 0)
    throw InvalidArgument("theta shape must be [S, A] with positive entries");
  if (data.size() != static_cast<std::size_t>(shape[0]) * static_cast<std::size_t>(shape[1]))
    throw InvalidArgument("theta data length does not match its shape");
  PolicyParams params(Matrix(shape[0], shape[1]));
  std::size_t i = 0;
  for (int s = 0; s < shape[0]; ++s)
    for (int a = 0; a < shape[1]; ++a) params.theta(s, a) = data[i++];
  validate_params(params);
  return params;
}

Json trajectory_to_json(const SeedSpec& seed, const Trajectory& traj) {
  Json j;
  j["seed"] = seed.master;
  j["l"] = seed.phase;
  j["k"] = seed.episode;
  j["i"] = seed.index;
  j["states"] = traj.states;
  j["actions"] = traj.actions;
  j["rewards"] = traj.rewards;
  return j;
}

Json episode_to_json(const EpisodeLog& log) {
  Json j;
  j["l"] = log.phase;
  j["k"] = log.k;
  j["n"] = log.n;
  j["H"] = log.horizon;
  j["episodes"] = log.episodes;
  j["lambda"] = log.lambda;
  j["alpha"] = log.alpha;
  j["grad_norm"] = log.grad_norm;
  j["truncated_value"] = log.truncated_value;
  j["value"] = log.value;
  if (log.exact_grad_norm >= 0.0) j["exact_grad_norm"] = log.exact_grad_norm;
  j["updated"] = log.updated;
  j["wall_time"] = log.wall_time;
  return j;
}

void write_regret_csv(std::ostream& os, const RegretLedger& ledger) {
  const bool batched = ledger.batch_size > 1;
  os << "n,l,k,H,gap,cumulative_regret,average_regret";
  if (batched) os << ",episodes,minibatch_regret";
  os << '\n';
  os << std::setprecision(17);
  double cumulative = 0.0;
  double weighted = 0.0;  // equals minibatch_regret over the episodes played so far
  for (const LedgerEntry& e : ledger.entries) {
    cumulative += e.gap;
    os << e.n << ',' << e.phase << ',' << e.k << ',' << e.horizon << ',' << e.gap << ','
       << cumulative << ',' << cumulative / static_cast<double>(e.n + 1);
    if (batched) {
      weighted += static_cast<double>(e.episodes) * e.gap;
      os << ',' << e.episodes << ',' << weighted;
    }
    os << '\n';
  }
}

}  // namespace phasedpg
