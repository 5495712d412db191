#include "phasedpg/mdp.hpp"

#include "phasedpg/policy.hpp"

#include <cmath>
#include <sstream>

namespace phasedpg {

namespace {

constexpr double kSimplexTol = 1e-12;

template <typename... Args>
[[noreturn]] void fail(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  throw InvalidArgument(os.str());
}

Matrix identity_minus_discounted(const Mdp& m, const Matrix& kernel) {
  return Matrix::Identity(m.num_states, m.num_states) - m.discount * kernel;
}

}  // namespace

void validate_mdp(const Mdp& m) {
  const int S = m.num_states;
  const int A = m.num_actions;
  if (S <= 0) fail("num_states must be positive, got ", S);
  if (A <= 0) fail("num_actions must be positive, got ", A);
  if (!(m.discount > 0.0 && m.discount < 1.0))
    fail("discount must lie strictly inside (0,1), got ", m.discount);
  if (m.transitions.rows() != static_cast<Eigen::Index>(S) * A || m.transitions.cols() != S)
    fail("transitions must have shape (S*A) x S = ", S * A, " x ", S, ", got ",
         m.transitions.rows(), " x ", m.transitions.cols());
  if (m.rewards.rows() != S || m.rewards.cols() != A)
    fail("rewards must have shape S x A = ", S, " x ", A);
  if (m.initial_dist.size() != S) fail("initial distribution must have length ", S);

  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double sum = 0.0;
      for (int n = 0; n < S; ++n) {
        const double p = m.transition(s, a, n);
        if (!std::isfinite(p) || p < 0.0)
          fail("transition probability p[", s, "][", a, "][", n, "] = ", p, " is negative");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kSimplexTol)
        fail("transition row p[", s, "][", a, "] sums to ", sum, ", off by ", sum - 1.0);
      const double r = m.rewards(s, a);
      if (!std::isfinite(r) || r < 0.0 || r > 1.0)
        fail("reward out of [0,1]: r[", s, "][", a, "] = ", r);
    }
  }

  double mass = 0.0;
  for (int s = 0; s < S; ++s) {
    const double rho = m.initial_dist(s);
    if (!std::isfinite(rho) || rho <= 0.0)
      fail("initial distribution not strictly positive: rho[", s, "] = ", rho);
    mass += rho;
  }
  if (std::abs(mass - 1.0) > kSimplexTol)
    fail("initial distribution sums to ", mass, ", off by ", mass - 1.0);
}

void validate_policy(const Mdp& m, const StatePolicy& pi) {
  if (pi.probs.rows() != m.num_states || pi.probs.cols() != m.num_actions)
    fail("policy must have shape ", m.num_states, " x ", m.num_actions);
  for (int s = 0; s < m.num_states; ++s) {
    double sum = 0.0;
    for (int a = 0; a < m.num_actions; ++a) {
      const double p = pi.probs(s, a);
      if (!std::isfinite(p) || p < 0.0) fail("policy entry pi[", s, "][", a, "] = ", p);
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSimplexTol)
      fail("policy row ", s, " sums to ", sum, ", off by ", sum - 1.0);
  }
}

Matrix induced_kernel(const Mdp& m, const StatePolicy& pi) {
  Matrix kernel = Matrix::Zero(m.num_states, m.num_states);
  for (int s = 0; s < m.num_states; ++s)
    for (int a = 0; a < m.num_actions; ++a)
      kernel.row(s) += pi.probs(s, a) * m.transition_row(s, a);
  return kernel;
}

Vector induced_reward(const Mdp& m, const StatePolicy& pi) {
  return pi.probs.cwiseProduct(m.rewards).rowwise().sum();
}

ValueReport policy_value(const Mdp& m, const StatePolicy& pi) {
  validate_policy(m, pi);
  const Matrix kernel = induced_kernel(m, pi);
  const Matrix system = identity_minus_discounted(m, kernel);
  const Eigen::PartialPivLU<Matrix> lu(system);

  ValueReport report;
  report.state_values = lu.solve(induced_reward(m, pi));
  report.value = m.initial_dist.dot(report.state_values);

  const Vector next_values = m.transitions * report.state_values;
  report.q_values.resize(m.num_states, m.num_actions);
  for (int s = 0; s < m.num_states; ++s)
    for (int a = 0; a < m.num_actions; ++a)
      report.q_values(s, a) = m.rewards(s, a) + m.discount * next_values(m.row_index(s, a));

  // (I - gamma P^T) x = rho, d = (1 - gamma) x
  const Eigen::PartialPivLU<Matrix> lu_t(identity_minus_discounted(m, kernel.transpose()));
  report.visitation = (1.0 - m.discount) * lu_t.solve(m.initial_dist);
  return report;
}

double truncated_value(const Mdp& m, const StatePolicy& pi, int horizon) {
  if (horizon < 0) fail("horizon must be nonnegative, got ", horizon);
  validate_policy(m, pi);
  const Matrix kernel_t = induced_kernel(m, pi).transpose();
  const Vector reward = induced_reward(m, pi);
  Vector dist = m.initial_dist;
  double weight = 1.0;
  double total = 0.0;
  for (int t = 0; t <= horizon; ++t) {
    total += weight * dist.dot(reward);
    dist = kernel_t * dist;
    weight *= m.discount;
  }
  return total;
}

OptimalSolution solve_optimal(const Mdp& m) {
  const int S = m.num_states;
  const int A = m.num_actions;
  std::vector<int> greedy(S, 0);
  OptimalSolution out;
  for (int iter = 1;; ++iter) {
    StatePolicy pi{Matrix::Zero(S, A)};
    for (int s = 0; s < S; ++s) pi.probs(s, greedy[s]) = 1.0;
    ValueReport report = policy_value(m, pi);

    // Switch only on strict improvement so the loop cannot cycle among ties.
    bool changed = false;
    for (int s = 0; s < S; ++s) {
      int best = greedy[s];
      double best_q = report.q_values(s, best);
      for (int a = 0; a < A; ++a) {
        const double q = report.q_values(s, a);
        const double margin = 1e-12 * std::max(1.0, std::abs(best_q));
        if (q > best_q + margin || (a < best && q >= best_q - margin)) {
          if (q > best_q + margin) changed = true;
          best = a;
          best_q = q;
        }
      }
      greedy[s] = best;
    }
    if (!changed) {
      StatePolicy final_pi{Matrix::Zero(S, A)};
      for (int s = 0; s < S; ++s) final_pi.probs(s, greedy[s]) = 1.0;
      const ValueReport final_report = policy_value(m, final_pi);
      out.policy = std::move(final_pi);
      out.value = final_report.value;
      out.state_values = final_report.state_values;
      out.iterations = iter;
      return out;
    }
  }
}

double mismatch_coefficient(const Mdp& m, const StatePolicy& optimal) {
  const Vector d = policy_value(m, optimal).visitation;
  return d.cwiseQuotient(m.initial_dist).maxCoeff();
}

double mismatch_coefficient(const Mdp& m) {
  return mismatch_coefficient(m, solve_optimal(m).policy);
}

double regularized_objective(const Mdp& m, const PolicyParams& params, double lambda) {
  return policy_value(m, softmax_policy(params)).value + lambda * regularizer(params);
}

Matrix exact_regularized_gradient(const Mdp& m, const PolicyParams& params, double lambda) {
  if (lambda < 0.0) fail("lambda must be nonnegative, got ", lambda);
  const StatePolicy pi = softmax_policy(params);
  const ValueReport report = policy_value(m, pi);
  // sum_t gamma^t E[Q(s_t,a_t) grad log pi] = (1/(1-gamma)) d(s) pi(a|s) (Q(s,a) - V(s))
  Matrix grad(m.num_states, m.num_actions);
  const double scale = 1.0 / (1.0 - m.discount);
  for (int s = 0; s < m.num_states; ++s)
    for (int a = 0; a < m.num_actions; ++a)
      grad(s, a) = scale * report.visitation(s) * pi.probs(s, a) *
                   (report.q_values(s, a) - report.state_values(s));
  if (lambda != 0.0) grad += lambda * regularizer_gradient(pi);
  return grad;
}

}  // namespace phasedpg
