#pragma once

#include "phasedpg/mdp.hpp"

namespace phasedpg {

/// Soft-max parameters theta in R^{S x A}.
struct PolicyParams {
  Matrix theta;

  PolicyParams() = default;
  explicit PolicyParams(Matrix t) : theta(std::move(t)) {}

  static PolicyParams zeros(int num_states, int num_actions) {
    return PolicyParams(Matrix::Zero(num_states, num_actions));
  }

  [[nodiscard]] int num_states() const { return static_cast<int>(theta.rows()); }
  [[nodiscard]] int num_actions() const { return static_cast<int>(theta.cols()); }
};

struct PostProcessConfig {
  double epsilon_pp = 0.0;  // in (0, 1/A]
};

void validate_params(const PolicyParams& params);

StatePolicy softmax_policy(const PolicyParams& params);

/// grad_theta log pi(a|s): zero outside row s, row s = e_a - pi(.|s).
Matrix log_policy_gradient(const PolicyParams& params, int s, int a);
Matrix log_policy_gradient(const StatePolicy& pi, int s, int a);

/// Log-barrier R(theta) = (1/SA) sum_{s,a} log pi(a|s).
double regularizer(const PolicyParams& params);

/// dR/dtheta_{s,a} = (1/SA) (1 - A pi(a|s)).
Matrix regularizer_gradient(const PolicyParams& params);
Matrix regularizer_gradient(const StatePolicy& pi);

/// Mixes toward uniform, pi_hat = eps + (1 - A eps) pi, and returns log pi_hat.
PolicyParams post_process(const PolicyParams& params, const PostProcessConfig& cfg);

/// Subtracts each row's mean; the induced policy is unchanged.
PolicyParams recenter(const PolicyParams& params);

/// L_lambda(theta) = F(pi_theta) + lambda R(theta).
double regularized_objective(const Mdp& m, const PolicyParams& params, double lambda);

/// Exact grad L_lambda via the policy gradient theorem.
Matrix exact_regularized_gradient(const Mdp& m, const PolicyParams& params, double lambda);

}  // namespace phasedpg
