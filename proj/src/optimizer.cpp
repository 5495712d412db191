#include "phasedpg/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace phasedpg {

namespace {

void check_T0(long long T0) {
  if (T0 < 1) throw InvalidArgument("T0 must be at least 1");
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

PolicyParams apply_update(const PolicyParams& theta, double alpha, const Matrix& grad,
                          bool recenter_after) {
  PolicyParams next(theta.theta + alpha * grad);
  return recenter_after ? recenter(next) : next;
}

void check_inputs(const Mdp& m, const PolicyParams& theta0) {
  validate_mdp(m);
  validate_params(theta0);
  if (theta0.num_states() != m.num_states || theta0.num_actions() != m.num_actions)
    throw InvalidArgument("theta0 shape does not match the MDP");
}

}  // namespace

long long index_to_global(int phase, long long k, long long T0) {
  check_T0(T0);
  if (phase < 0 || phase > 60) throw InvalidArgument("phase index out of domain");
  const long long length = (1LL << phase) * T0;
  if (k < 0 || k >= length) {
    std::ostringstream os;
    os << "episode index " << k << " outside [0, " << length - 1 << "] for phase " << phase;
    throw InvalidArgument(os.str());
  }
  return ((1LL << phase) - 1) * T0 + k;
}

std::pair<int, long long> global_to_index(long long n, long long T0) {
  check_T0(T0);
  if (n < 0) throw InvalidArgument("global episode index must be nonnegative");
  int l = 0;
  long long start = 0;
  long long length = T0;
  while (n >= start + length) {
    start += length;
    length *= 2;
    ++l;
  }
  return {l, n - start};
}

double smoothness_constant(double gamma, double lambda, int num_states) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("smoothness_constant: gamma outside (0,1)");
  if (lambda < 0.0) throw InvalidArgument("smoothness_constant: lambda must be >= 0");
  if (num_states < 1) throw InvalidArgument("smoothness_constant: S must be >= 1");
  const double g = 1.0 - gamma;
  return 8.0 / (g * g * g) + 2.0 * lambda / num_states;
}

double step_size(double coefficient, long long k) {
  const double x = static_cast<double>(k) + 3.0;
  return coefficient / (std::sqrt(x) * std::log2(x));
}

PhasePlan PhasePlan::defaults_for(const Mdp& m) {
  PhasePlan plan;
  plan.gamma = m.discount;
  plan.num_states = m.num_states;
  plan.num_actions = m.num_actions;
  return plan;
}

long long PhasePlan::phase_length(int l) const { return (1LL << l) * T0; }

double PhasePlan::epsilon(int l) const {
  return std::pow(static_cast<double>(phase_length(l)), -1.0 / 6.0);
}

double PhasePlan::lambda(int l) const { return epsilon(l) * (1.0 - gamma) / 2.0; }

double PhasePlan::lambda_bar() const { return (1.0 - gamma) / 2.0; }

double PhasePlan::pp_tolerance() const {
  return epsilon_pp.value_or(1.0 / (2.0 * num_actions));
}

std::pair<double, double> PhasePlan::coefficient_window(int l) const {
  return {1.0 / (2.0 * smoothness_constant(gamma, lambda_bar(), num_states)),
          1.0 / (2.0 * smoothness_constant(gamma, lambda(l), num_states))};
}

double PhasePlan::coefficient(int l) const {
  const auto [lo, hi] = coefficient_window(l);
  if (!step_coefficient) return hi;
  const double c = *step_coefficient;
  const double slack = 1e-12 * hi;
  if (c < lo - slack || c > hi + slack) {
    std::ostringstream os;
    os << "step coefficient " << c << " outside the admissible window [" << lo << ", " << hi
       << "] of phase " << l;
    throw InvalidArgument(os.str());
  }
  return c;
}

double PhasePlan::step(int l, long long k) const { return step_size(coefficient(l), k); }

void PhasePlan::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("plan: gamma outside (0,1)");
  if (num_states < 1 || num_actions < 1) throw InvalidArgument("plan: S and A must be >= 1");
  check_T0(T0);
  if (batch_size < 1) throw InvalidArgument("plan: batch size must be >= 1");
  const double eps = pp_tolerance();
  if (!(eps > 0.0 && eps <= 1.0 / num_actions))
    throw InvalidArgument("plan: epsilon_pp must lie in (0, 1/A]");
  validate_estimator_config(estimator, num_states);
  if (step_coefficient) {
    if (!(*step_coefficient > 0.0)) throw InvalidArgument("plan: step coefficient must be > 0");
    // The window widens with l, so phase 0 is the binding constraint.
    (void)coefficient(0);
  }
}

RunRecord run_single(const Mdp& m, const PolicyParams& theta0, const SingleRunConfig& cfg,
                     long long episodes, std::uint64_t seed, const RunOptions& opts) {
  check_inputs(m, theta0);
  if (cfg.lambda < 0.0) throw InvalidArgument("run_single: lambda must be >= 0");
  if (episodes < 0) throw InvalidArgument("run_single: episode count must be >= 0");
  const double coefficient =
      cfg.step_coefficient.value_or(1.0 / (2.0 * smoothness_constant(m.discount, cfg.lambda, m.num_states)));
  Baseline baseline(cfg.estimator, m.num_states);

  RunRecord record;
  record.initial_theta = theta0;
  record.master_seed = seed;
  PolicyParams theta = theta0;
  const auto start = Clock::now();
  for (long long n = 0; n < episodes; ++n) {
    EpisodeLog log;
    log.n = n;
    log.k = n;
    log.horizon = horizon_schedule(n, m.discount, cfg.estimator.beta);
    log.lambda = cfg.lambda;
    log.alpha = step_size(coefficient, n);

    const StatePolicy pi = softmax_policy(theta);
    log.truncated_value = truncated_value(m, pi, log.horizon);
    log.value = policy_value(m, pi).value;
    if (opts.log_exact_gradient)
      log.exact_grad_norm = exact_regularized_gradient(m, theta, cfg.lambda).norm();

    const SeedSpec spec{seed, 0, static_cast<std::uint64_t>(n), 0};
    const Trajectory traj = sample_trajectory(m, pi, log.horizon, spec);
    const Matrix grad =
        reinforce_gradient(traj, pi, cfg.lambda, m.discount, cfg.estimator.beta, baseline.values());
    log.grad_norm = grad.norm();
    theta = apply_update(theta, log.alpha, grad, cfg.recenter);
    baseline.observe(traj, m.discount, cfg.estimator.beta);
    if (opts.on_trajectory) opts.on_trajectory(spec, traj);
    log.wall_time = seconds_since(start);
    record.episodes.push_back(log);
  }
  record.final_theta = theta;
  return record;
}

namespace {

/// Shared phase/episode bookkeeping. `estimate` provides sample() for the
/// step's trajectories and gradient() for the update direction.
template <typename Estimate>
RunRecord phased_loop(const Mdp& m, const PolicyParams& theta0, const PhasePlan& plan,
                      long long total_episodes, std::uint64_t seed, const RunOptions& opts,
                      Estimate&& estimate) {
  check_inputs(m, theta0);
  plan.validate();
  if (plan.num_states != m.num_states || plan.num_actions != m.num_actions ||
      plan.gamma != m.discount)
    throw InvalidArgument("phase plan does not match the MDP (S, A, gamma)");
  if (total_episodes < 0) throw InvalidArgument("episode count must be >= 0");

  const int M = plan.batch_size;
  const long long full_steps = total_episodes / M;
  const int remainder = static_cast<int>(total_episodes % M);
  const long long steps = full_steps + (remainder > 0 ? 1 : 0);
  const PostProcessConfig pp{plan.pp_tolerance()};

  Baseline baseline(plan.estimator, m.num_states);
  RunRecord record;
  record.initial_theta = theta0;
  record.T0 = plan.T0;
  record.batch_size = M;
  record.master_seed = seed;

  PolicyParams theta = post_process(theta0, pp);
  const auto start = Clock::now();
  for (long long n = 0; n < steps; ++n) {
    const auto [l, k] = global_to_index(n, plan.T0);
    if (k == 0 && l > 0) theta = post_process(theta, pp);

    EpisodeLog log;
    log.phase = l;
    log.k = k;
    log.n = n;
    log.horizon = horizon_schedule(k, m.discount, plan.estimator.beta);
    log.lambda = plan.lambda(l);
    log.alpha = plan.step(l, k);
    log.episodes = n < full_steps ? M : remainder;
    log.updated = n < full_steps;

    const StatePolicy pi = softmax_policy(theta);
    log.truncated_value = truncated_value(m, pi, log.horizon);
    log.value = policy_value(m, pi).value;
    if (opts.log_exact_gradient)
      log.exact_grad_norm = exact_regularized_gradient(m, theta, log.lambda).norm();

    const SeedSpec spec{seed, static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(k), 0};
    const std::vector<Trajectory> trajs = estimate.sample(theta, pi, log, spec);
    if (log.updated) {
      const Matrix grad = estimate.gradient(trajs, theta, pi, log.lambda, baseline);
      log.grad_norm = grad.norm();
      theta = apply_update(theta, log.alpha, grad, plan.recenter);
    }
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      baseline.observe(trajs[i], m.discount, plan.estimator.beta);
      if (opts.on_trajectory) opts.on_trajectory(spec.with_index(i), trajs[i]);
    }
    log.wall_time = seconds_since(start);
    record.episodes.push_back(log);
  }
  record.final_theta = theta;
  return record;
}

struct SingleTrajectoryStep {
  const Mdp& m;
  const PhasePlan& plan;

  std::vector<Trajectory> sample(const PolicyParams&, const StatePolicy& pi, const EpisodeLog& log,
                                 const SeedSpec& spec) const {
    return {sample_trajectory(m, pi, log.horizon, spec)};
  }
  Matrix gradient(const std::vector<Trajectory>& trajs, const PolicyParams&, const StatePolicy& pi,
                  double lambda, const Baseline& baseline) const {
    return reinforce_gradient(trajs.front(), pi, lambda, m.discount, plan.estimator.beta,
                              baseline.values());
  }
};

struct BatchStep {
  const Mdp& m;
  const PhasePlan& plan;
  bool parallel;

  std::vector<Trajectory> sample(const PolicyParams& theta, const StatePolicy&,
                                 const EpisodeLog& log, const SeedSpec& spec) const {
    return sample_batch(m, theta, log.horizon, log.episodes, spec, parallel);
  }
  Matrix gradient(const std::vector<Trajectory>& trajs, const PolicyParams& theta,
                  const StatePolicy&, double lambda, const Baseline& baseline) const {
    return minibatch_gradient(trajs, theta, lambda, m.discount, plan.estimator.beta,
                              baseline.values());
  }
};

}  // namespace

RunRecord run_phased(const Mdp& m, const PolicyParams& theta0, const PhasePlan& plan,
                     long long total_episodes, std::uint64_t seed, const RunOptions& opts) {
  if (plan.batch_size != 1)
    throw InvalidArgument("run_phased uses one trajectory per step; use run_minibatch");
  return phased_loop(m, theta0, plan, total_episodes, seed, opts, SingleTrajectoryStep{m, plan});
}

RunRecord run_minibatch(const Mdp& m, const PolicyParams& theta0, const PhasePlan& plan,
                        long long total_episodes, std::uint64_t seed, const RunOptions& opts) {
  return phased_loop(m, theta0, plan, total_episodes, seed, opts,
                     BatchStep{m, plan, opts.parallel_batch});
}

}  // namespace phasedpg
