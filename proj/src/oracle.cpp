#include "phasedpg/oracle.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace phasedpg {

Matrix finite_difference_gradient(const Mdp& m, const PolicyParams& params, double lambda, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite_difference_gradient: h must be positive");
  Matrix grad(params.num_states(), params.num_actions());
  PolicyParams probe = params;
  for (int s = 0; s < params.num_states(); ++s) {
    for (int a = 0; a < params.num_actions(); ++a) {
      const double original = probe.theta(s, a);
      probe.theta(s, a) = original + h;
      const double up = regularized_objective(m, probe, lambda);
      probe.theta(s, a) = original - h;
      const double down = regularized_objective(m, probe, lambda);
      probe.theta(s, a) = original;
      grad(s, a) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

FiniteDifferenceCheck finite_difference_check(const Mdp& m, const PolicyParams& params,
                                              double lambda, double h) {
  FiniteDifferenceCheck out;
  out.coarse = finite_difference_gradient(m, params, lambda, h);
  out.fine = finite_difference_gradient(m, params, lambda, h / 2.0);
  out.richardson = (4.0 * out.fine - out.coarse) / 3.0;
  out.consistency = (out.coarse - out.fine).norm() / std::max(1.0, out.fine.norm());
  return out;
}

double gradient_relative_error(const Matrix& exact, const Matrix& approx) {
  return (exact - approx).norm() / std::max(exact.norm(), 1e-6);
}

namespace {

void check_enumerable(const Mdp& m, const EstimatorConfig& cfg, int horizon) {
  if (horizon < 0) throw InvalidArgument("enumeration: horizon must be nonnegative");
  if (cfg.baseline == BaselineKind::reinforcement_average)
    throw InvalidArgument("enumeration: reinforcement-average baseline depends on run history");
  const double sa = static_cast<double>(m.num_states) * m.num_actions;
  const double atoms = std::pow(sa, horizon + 1) * std::pow(static_cast<double>(m.num_states), horizon);
  if (atoms > kEnumerationLimit) {
    std::ostringstream os;
    os << "enumeration too large: " << atoms << " atoms exceeds the limit " << kEnumerationLimit;
    throw InvalidArgument(os.str());
  }
}

/// Depth-first walk over (s_0, a_0, ..., s_H, a_H) in index order.
template <typename Visit>
void walk_trajectories(const Mdp& m, const StatePolicy& pi, int horizon, Visit&& visit) {
  Trajectory traj;
  const auto steps = static_cast<std::size_t>(horizon) + 1;
  traj.states.resize(steps);
  traj.actions.resize(steps);
  traj.rewards.resize(steps);

  std::function<void(std::size_t, int, double)> expand = [&](std::size_t t, int s, double prob) {
    for (int a = 0; a < m.num_actions; ++a) {
      const double pa = prob * pi.probs(s, a);
      if (pa == 0.0) continue;
      traj.states[t] = s;
      traj.actions[t] = a;
      traj.rewards[t] = m.rewards(s, a);
      if (t + 1 == steps) {
        visit(traj, pa);
        continue;
      }
      for (int next = 0; next < m.num_states; ++next) {
        const double pn = pa * m.transition(s, a, next);
        if (pn != 0.0) expand(t + 1, next, pn);
      }
    }
  };
  for (int s0 = 0; s0 < m.num_states; ++s0) expand(0, s0, m.initial_dist(s0));
}

}  // namespace

std::vector<TrajectoryAtom> enumerate_atoms(const Mdp& m, const PolicyParams& params,
                                            double lambda, const EstimatorConfig& cfg, int horizon) {
  validate_mdp(m);
  check_enumerable(m, cfg, horizon);
  const Baseline baseline(cfg, m.num_states);
  const StatePolicy pi = softmax_policy(params);
  std::vector<TrajectoryAtom> atoms;
  walk_trajectories(m, pi, horizon, [&](const Trajectory& traj, double prob) {
    atoms.push_back({prob, reinforce_gradient(traj, pi, lambda, m.discount, cfg.beta, baseline.values())});
  });
  return atoms;
}

EnumerationReport enumerate_estimator(const Mdp& m, const PolicyParams& params, double lambda,
                                      const EstimatorConfig& cfg, int horizon) {
  validate_mdp(m);
  check_enumerable(m, cfg, horizon);
  const Baseline baseline(cfg, m.num_states);
  const StatePolicy pi = softmax_policy(params);

  EnumerationReport report;
  report.mean_gradient = Matrix::Zero(m.num_states, m.num_actions);
  walk_trajectories(m, pi, horizon, [&](const Trajectory& traj, double prob) {
    const Matrix g = reinforce_gradient(traj, pi, lambda, m.discount, cfg.beta, baseline.values());
    report.mean_gradient += prob * g;
    report.second_moment += prob * g.squaredNorm();
    report.total_probability += prob;
    ++report.atoms;
  });
  report.trace_covariance = report.second_moment - report.mean_gradient.squaredNorm();
  return report;
}

AscentResult ascend_regularized(const Mdp& m, const PolicyParams& start, double lambda,
                                double tolerance, int max_iterations) {
  AscentResult out;
  out.params = start;
  double value = regularized_objective(m, out.params, lambda);
  Matrix grad = exact_regularized_gradient(m, out.params, lambda);
  double step = 1.0;
  for (; out.iterations < max_iterations; ++out.iterations) {
    out.grad_norm = grad.norm();
    if (out.grad_norm <= tolerance) {
      out.converged = true;
      return out;
    }
    // Armijo backtracking on the ascent direction.
    for (;;) {
      PolicyParams trial(out.params.theta + step * grad);
      const double trial_value = regularized_objective(m, trial, lambda);
      if (trial_value >= value + 0.5 * step * out.grad_norm * out.grad_norm || step < 1e-14) {
        out.params = std::move(trial);
        value = trial_value;
        break;
      }
      step *= 0.5;
    }
    step = std::min(step * 2.0, 1e3);
    grad = exact_regularized_gradient(m, out.params, lambda);
  }
  out.grad_norm = grad.norm();
  out.converged = out.grad_norm <= tolerance;
  return out;
}

bool check_second_moment(const EnumerationReport& report, const Matrix& exact_gradient,
                         const BoundConstants& constants) {
  return report.second_moment <= constants.M1 + constants.M2 * exact_gradient.squaredNorm();
}

}  // namespace phasedpg
