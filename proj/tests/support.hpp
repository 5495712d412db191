#pragma once

// Small instances, random generators and reference computations that avoid
// the library code paths they are used to check.

#include "phasedpg/mdp.hpp"
#include "phasedpg/policy.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace phasedpg::testing {

inline Mdp single_state(std::vector<double> rewards, double gamma) {
  Mdp m;
  m.num_states = 1;
  m.num_actions = static_cast<int>(rewards.size());
  m.discount = gamma;
  m.initial_dist = Vector::Ones(1);
  m.rewards = Matrix(1, m.num_actions);
  for (int a = 0; a < m.num_actions; ++a) m.rewards(0, a) = rewards[static_cast<std::size_t>(a)];
  m.transitions = Matrix::Ones(m.num_actions, 1);
  return m;
}

/// Two states, two actions; action 0 stays, action 1 switches.
inline Mdp two_state_switch(double gamma) {
  Mdp m;
  m.num_states = 2;
  m.num_actions = 2;
  m.discount = gamma;
  m.initial_dist = Vector(2);
  m.initial_dist << 0.5, 0.5;
  m.rewards = Matrix(2, 2);
  m.rewards << 0.0, 0.2,
               1.0, 0.0;
  m.transitions = Matrix(4, 2);
  m.transitions << 1.0, 0.0,
                   0.0, 1.0,
                   0.0, 1.0,
                   1.0, 0.0;
  return m;
}

/// Two states, one action: state 0 earns 0 and moves to state 1, which is
/// absorbing with reward 1.
inline Mdp absorbing_chain(double gamma, double rho0, double rho1) {
  Mdp m;
  m.num_states = 2;
  m.num_actions = 1;
  m.discount = gamma;
  m.initial_dist = Vector(2);
  m.initial_dist << rho0, rho1;
  m.rewards = Matrix(2, 1);
  m.rewards << 0.0, 1.0;
  m.transitions = Matrix(2, 2);
  m.transitions << 0.0, 1.0,
                   0.0, 1.0;
  return m;
}

/// Hand-rolled generator of small random MDPs with a fixed engine.
struct MdpGenerator {
  std::mt19937_64 engine;
  explicit MdpGenerator(std::uint64_t seed) : engine(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }

  Mdp mdp(int S, int A, double gamma) {
    Mdp m;
    m.num_states = S;
    m.num_actions = A;
    m.discount = gamma;
    m.rewards = Matrix(S, A);
    m.transitions = Matrix(S * A, S);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) m.rewards(s, a) = uniform();
    for (int r = 0; r < S * A; ++r) {
      double total = 0.0;
      for (int n = 0; n < S; ++n) total += (m.transitions(r, n) = uniform(0.05, 1.0));
      m.transitions.row(r) /= total;
    }
    m.initial_dist = Vector(S);
    for (int s = 0; s < S; ++s) m.initial_dist(s) = uniform(0.1, 1.0);
    m.initial_dist /= m.initial_dist.sum();
    return m;
  }

  Mdp mdp() { return mdp(integer(1, 4), integer(1, 4), uniform() < 0.5 ? 0.5 : 0.9); }

  PolicyParams params(int S, int A, double scale = 2.0) {
    Matrix t(S, A);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) t(s, a) = uniform(-scale, scale);
    return PolicyParams(t);
  }
};

/// Plain-loop softmax (no row-max shift) for moderate theta.
inline Matrix naive_softmax(const Matrix& theta) {
  Matrix p(theta.rows(), theta.cols());
  for (Eigen::Index s = 0; s < theta.rows(); ++s) {
    double z = 0.0;
    for (Eigen::Index a = 0; a < theta.cols(); ++a) z += std::exp(theta(s, a));
    for (Eigen::Index a = 0; a < theta.cols(); ++a) p(s, a) = std::exp(theta(s, a)) / z;
  }
  return p;
}

/// Iterated Bellman expectation operator until the sup-norm step is below tol.
inline Vector iterate_policy_values(const Mdp& m, const Matrix& pi, double tol = 1e-14) {
  Vector v = Vector::Zero(m.num_states);
  for (int it = 0; it < 100000; ++it) {
    Vector next = Vector::Zero(m.num_states);
    for (int s = 0; s < m.num_states; ++s)
      for (int a = 0; a < m.num_actions; ++a) {
        double cont = 0.0;
        for (int n = 0; n < m.num_states; ++n) cont += m.transitions(s * m.num_actions + a, n) * v(n);
        next(s) += pi(s, a) * (m.rewards(s, a) + m.discount * cont);
      }
    const double step = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (step < tol) break;
  }
  return v;
}

/// Value iteration on the Bellman optimality operator.
inline Vector iterate_optimal_values(const Mdp& m, double tol = 1e-14) {
  Vector v = Vector::Zero(m.num_states);
  for (int it = 0; it < 100000; ++it) {
    Vector next(m.num_states);
    for (int s = 0; s < m.num_states; ++s) {
      double best = -1e300;
      for (int a = 0; a < m.num_actions; ++a) {
        double q = m.rewards(s, a);
        for (int n = 0; n < m.num_states; ++n)
          q += m.discount * m.transitions(s * m.num_actions + a, n) * v(n);
        best = std::max(best, q);
      }
      next(s) = best;
    }
    const double step = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (step < tol) break;
  }
  return v;
}

/// Discounted state visitation by summing the power series to `terms`.
inline Vector series_visitation(const Mdp& m, const Matrix& pi, int terms) {
  Vector dist = m.initial_dist;
  Vector d = Vector::Zero(m.num_states);
  double w = 1.0;
  for (int t = 0; t < terms; ++t) {
    d += w * dist;
    Vector next = Vector::Zero(m.num_states);
    for (int s = 0; s < m.num_states; ++s)
      for (int a = 0; a < m.num_actions; ++a)
        for (int n = 0; n < m.num_states; ++n)
          next(n) += dist(s) * pi(s, a) * m.transitions(s * m.num_actions + a, n);
    dist = next;
    w *= m.discount;
  }
  return (1.0 - m.discount) * d;
}

}  // namespace phasedpg::testing
