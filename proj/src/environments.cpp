#include "phasedpg/environments.hpp"

#include "phasedpg/rollout.hpp"

#include <cmath>
#include <set>

namespace phasedpg {

namespace {

Vector uniform_dist(int n) { return Vector::Constant(n, 1.0 / n); }

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie strictly inside (0,1)");
}

}  // namespace

Mdp make_chain(int num_states, double gamma, double reset_reward) {
  if (num_states < 1) throw InvalidArgument("chain: S must be >= 1");
  check_gamma(gamma);
  if (!(reset_reward >= 0.0 && reset_reward <= 1.0))
    throw InvalidArgument("chain: reset reward must lie in [0,1]");
  Mdp m;
  m.num_states = num_states;
  m.num_actions = 2;
  m.discount = gamma;
  m.initial_dist = uniform_dist(num_states);
  m.rewards = Matrix::Zero(num_states, 2);
  m.transitions = Matrix::Zero(2 * num_states, num_states);
  for (int s = 0; s < num_states; ++s) {
    m.transitions(m.row_index(s, 0), 0) = 1.0;
    m.transitions(m.row_index(s, 1), std::min(s + 1, num_states - 1)) = 1.0;
  }
  m.rewards(num_states - 1, 1) = 1.0;
  m.rewards(0, 0) = std::max(m.rewards(0, 0), reset_reward);
  validate_mdp(m);
  return m;
}

Mdp make_gridworld(int width, int height, double gamma, double slip) {
  if (width < 1 || height < 1) throw InvalidArgument("gridworld: width and height must be >= 1");
  check_gamma(gamma);
  if (!(slip >= 0.0 && slip <= 1.0)) throw InvalidArgument("gridworld: slip must lie in [0,1]");
  const int S = width * height;
  const int goal = S - 1;
  constexpr int dx[4] = {0, 1, 0, -1};
  constexpr int dy[4] = {-1, 0, 1, 0};
  Mdp m;
  m.num_states = S;
  m.num_actions = 4;
  m.discount = gamma;
  m.initial_dist = uniform_dist(S);
  m.rewards = Matrix::Zero(S, 4);
  m.transitions = Matrix::Zero(S * 4, S);
  for (int s = 0; s < S; ++s) {
    const int x = s % width;
    const int y = s / width;
    for (int a = 0; a < 4; ++a) {
      if (s == goal) {
        m.rewards(s, a) = 1.0;
        m.transitions(m.row_index(s, a), s) = 1.0;
        continue;
      }
      const int nx = x + dx[a];
      const int ny = y + dy[a];
      const bool inside = nx >= 0 && nx < width && ny >= 0 && ny < height;
      const int target = inside ? ny * width + nx : s;
      m.transitions(m.row_index(s, a), target) += 1.0 - slip;
      m.transitions(m.row_index(s, a), s) += slip;
    }
  }
  validate_mdp(m);
  return m;
}

Mdp make_random(int num_states, int num_actions, double gamma, std::uint64_t seed) {
  if (num_states < 1 || num_actions < 1) throw InvalidArgument("random: S and A must be >= 1");
  check_gamma(gamma);
  StreamRng rng(SeedSpec{seed, 0, 0, 0});
  Mdp m;
  m.num_states = num_states;
  m.num_actions = num_actions;
  m.discount = gamma;
  m.initial_dist = uniform_dist(num_states);
  m.rewards.resize(num_states, num_actions);
  m.transitions.resize(num_states * num_actions, num_states);
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      // Dirichlet(1, ..., 1) = normalized Exp(1) draws.
      double total = 0.0;
      for (int n = 0; n < num_states; ++n) {
        const double e = -std::log(rng.uniform_open_zero());
        m.transitions(m.row_index(s, a), n) = e;
        total += e;
      }
      m.transitions.row(m.row_index(s, a)) /= total;
      m.rewards(s, a) = rng.uniform();
    }
  }
  validate_mdp(m);
  return m;
}

namespace {

class ParamReader {
 public:
  explicit ParamReader(const std::map<std::string, std::string>& params) : params_(params) {}

  int get_int(const std::string& key, int fallback) {
    used_.insert(key);
    const auto it = params_.find(key);
    if (it == params_.end()) return fallback;
    std::size_t pos = 0;
    const int v = std::stoi(it->second, &pos);
    if (pos != it->second.size()) throw InvalidArgument("parameter '" + key + "' is not an integer");
    return v;
  }
  double get_double(const std::string& key, double fallback) {
    used_.insert(key);
    const auto it = params_.find(key);
    if (it == params_.end()) return fallback;
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw InvalidArgument("parameter '" + key + "' is not a number");
    return v;
  }
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
    used_.insert(key);
    const auto it = params_.find(key);
    if (it == params_.end()) return fallback;
    std::size_t pos = 0;
    const auto v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw InvalidArgument("parameter '" + key + "' is not an integer");
    return v;
  }
  void reject_unknown(const std::string& env) const {
    for (const auto& [key, value] : params_)
      if (!used_.count(key)) throw InvalidArgument("unknown parameter '" + key + "' for " + env);
  }

 private:
  const std::map<std::string, std::string>& params_;
  std::set<std::string> used_;
};

}  // namespace

Mdp make_environment(const std::string& name, const std::map<std::string, std::string>& params) {
  ParamReader p(params);
  try {
    if (name == "chain") {
      const int S = p.get_int("S", 3);
      const double gamma = p.get_double("gamma", 0.9);
      const double reset = p.get_double("reset_reward", 0.1);
      p.reject_unknown(name);
      return make_chain(S, gamma, reset);
    }
    if (name == "gridworld") {
      const int width = p.get_int("width", 3);
      const int height = p.get_int("height", 3);
      const double gamma = p.get_double("gamma", 0.9);
      const double slip = p.get_double("slip", 0.1);
      p.reject_unknown(name);
      return make_gridworld(width, height, gamma, slip);
    }
    if (name == "random") {
      const int S = p.get_int("S", 4);
      const int A = p.get_int("A", 3);
      const double gamma = p.get_double("gamma", 0.9);
      const std::uint64_t seed = p.get_u64("seed", 0);
      p.reject_unknown(name);
      return make_random(S, A, gamma, seed);
    }
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const InvalidArgument*>(&e)) throw;
    throw InvalidArgument(name + ": invalid parameter value (" + e.what() + ")");
  }
  throw InvalidArgument("unknown environment '" + name + "' (expected chain, gridworld or random)");
}

}  // namespace phasedpg
