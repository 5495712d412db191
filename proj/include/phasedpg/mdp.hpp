#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace phasedpg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when an input violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Finite discounted MDP.
///
/// Transitions are stored as an (S*A) x S matrix whose row `s*A + a` is the
/// next-state distribution p(.|s,a). Rewards are deterministic and live in
/// [0, 1]; the discount is strictly inside (0, 1) and the initial
/// distribution is strictly positive.
struct Mdp {
  int num_states = 0;
  int num_actions = 0;
  Matrix transitions;  // (S*A) x S
  Matrix rewards;      // S x A
  double discount = 0.0;
  Vector initial_dist;  // S

  [[nodiscard]] Eigen::Index row_index(int s, int a) const {
    return static_cast<Eigen::Index>(s) * num_actions + a;
  }
  [[nodiscard]] double transition(int s, int a, int next) const {
    return transitions(row_index(s, a), next);
  }
  [[nodiscard]] auto transition_row(int s, int a) const {
    return transitions.row(row_index(s, a));
  }
};

/// Per-state action distributions, an S x A row-stochastic matrix.
struct StatePolicy {
  Matrix probs;

  [[nodiscard]] int num_states() const { return static_cast<int>(probs.rows()); }
  [[nodiscard]] int num_actions() const { return static_cast<int>(probs.cols()); }
};

struct ValueReport {
  double value = 0.0;  // F(pi) = rho . V
  Vector state_values;
  Matrix q_values;
  Vector visitation;  // d_rho^pi
};

struct OptimalSolution {
  StatePolicy policy;  // deterministic
  double value = 0.0;
  Vector state_values;
  int iterations = 0;
};

/// Throws InvalidArgument naming the first violated invariant.
void validate_mdp(const Mdp& m);
void validate_policy(const Mdp& m, const StatePolicy& pi);

/// P_pi (S x S) and r_pi (S) induced by a state policy.
Matrix induced_kernel(const Mdp& m, const StatePolicy& pi);
Vector induced_reward(const Mdp& m, const StatePolicy& pi);

ValueReport policy_value(const Mdp& m, const StatePolicy& pi);

/// Expected discounted return truncated after step H (steps 0..H inclusive).
double truncated_value(const Mdp& m, const StatePolicy& pi, int horizon);

/// Policy iteration from the all-zeros-action policy; greedy ties go to the
/// lowest action index.
OptimalSolution solve_optimal(const Mdp& m);

/// max_s d_rho^{pi*}(s) / rho(s).
double mismatch_coefficient(const Mdp& m);
double mismatch_coefficient(const Mdp& m, const StatePolicy& optimal);

}  // namespace phasedpg
