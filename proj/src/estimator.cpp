#include "phasedpg/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace phasedpg {

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::zero: return "zero";
    case BaselineKind::constant: return "constant";
    case BaselineKind::table: return "table";
    case BaselineKind::reinforcement_average: return "reinforcement_average";
  }
  return "unknown";
}

BaselineKind baseline_kind_from_string(const std::string& name) {
  if (name == "zero") return BaselineKind::zero;
  if (name == "constant") return BaselineKind::constant;
  if (name == "table") return BaselineKind::table;
  if (name == "reinforcement_average") return BaselineKind::reinforcement_average;
  throw InvalidArgument("unknown baseline kind '" + name + "'");
}

void validate_estimator_config(const EstimatorConfig& cfg, int num_states) {
  if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) {
    std::ostringstream os;
    os << "estimator beta must lie in (0,1), got " << cfg.beta;
    throw InvalidArgument(os.str());
  }
  if (!(cfg.baseline_bound >= 0.0) || !std::isfinite(cfg.baseline_bound))
    throw InvalidArgument("baseline bound must be a finite nonnegative number");
  const auto within = [&](double b) { return std::abs(b) <= cfg.baseline_bound; };
  switch (cfg.baseline) {
    case BaselineKind::zero:
    case BaselineKind::reinforcement_average:
      break;
    case BaselineKind::constant:
      if (!within(cfg.baseline_constant))
        throw InvalidArgument("constant baseline exceeds its bound B");
      break;
    case BaselineKind::table:
      if (static_cast<int>(cfg.baseline_table.size()) != num_states)
        throw InvalidArgument("baseline table must have one entry per state");
      for (double b : cfg.baseline_table)
        if (!within(b)) throw InvalidArgument("baseline table entry exceeds its bound B");
      break;
  }
}

Baseline::Baseline(const EstimatorConfig& cfg, int num_states)
    : kind_(cfg.baseline),
      bound_(cfg.baseline_bound),
      values_(static_cast<std::size_t>(num_states), 0.0),
      sums_(static_cast<std::size_t>(num_states), 0.0),
      counts_(static_cast<std::size_t>(num_states), 0) {
  validate_estimator_config(cfg, num_states);
  if (kind_ == BaselineKind::constant)
    std::fill(values_.begin(), values_.end(), cfg.baseline_constant);
  else if (kind_ == BaselineKind::table)
    values_ = cfg.baseline_table;
}

void Baseline::observe(const Trajectory& traj, double gamma, double beta) {
  if (kind_ != BaselineKind::reinforcement_average) return;
  const std::vector<double> q = reward_to_go_all(traj, gamma);
  const int last = truncation_index(traj.horizon(), beta);
  for (int t = 0; t <= last; ++t) {
    const auto s = static_cast<std::size_t>(traj.states[static_cast<std::size_t>(t)]);
    sums_[s] += q[static_cast<std::size_t>(t)];
    counts_[s] += 1;
  }
  for (std::size_t s = 0; s < values_.size(); ++s) {
    if (counts_[s] == 0) continue;
    values_[s] = std::clamp(sums_[s] / static_cast<double>(counts_[s]), -bound_, bound_);
  }
}

std::vector<double> reward_to_go_all(const Trajectory& traj, double gamma) {
  std::vector<double> out(traj.rewards.size());
  double acc = 0.0;
  for (std::size_t t = out.size(); t-- > 0;) {
    acc = traj.rewards[t] + gamma * acc;
    out[t] = acc;
  }
  return out;
}

double reward_to_go(const Trajectory& traj, int t, double gamma) {
  if (t < 0 || t > traj.horizon()) {
    std::ostringstream os;
    os << "reward_to_go: index " << t << " outside [0, " << traj.horizon() << "]";
    throw InvalidArgument(os.str());
  }
  double acc = 0.0;
  for (int u = traj.horizon(); u >= t; --u) acc = traj.rewards[static_cast<std::size_t>(u)] + gamma * acc;
  return acc;
}

int truncation_index(int horizon, double beta) {
  return static_cast<int>(std::floor(beta * static_cast<double>(horizon)));
}

Matrix reinforce_gradient(const Trajectory& traj, const StatePolicy& pi, double lambda,
                          double gamma, double beta, std::span<const double> baseline) {
  if (lambda < 0.0) throw InvalidArgument("reinforce_gradient: lambda must be nonnegative");
  if (static_cast<int>(baseline.size()) != pi.num_states())
    throw InvalidArgument("reinforce_gradient: baseline must have one value per state");

  const std::vector<double> q = reward_to_go_all(traj, gamma);
  const int last = std::min(truncation_index(traj.horizon(), beta), traj.horizon());
  Matrix grad = Matrix::Zero(pi.num_states(), pi.num_actions());
  double discount = 1.0;
  for (int t = 0; t <= last; ++t) {
    const auto idx = static_cast<std::size_t>(t);
    const int s = traj.states[idx];
    const int a = traj.actions[idx];
    const double weight = discount * (q[idx] - baseline[static_cast<std::size_t>(s)]);
    grad.row(s) -= weight * pi.probs.row(s);
    grad(s, a) += weight;
    discount *= gamma;
  }
  if (lambda != 0.0) grad += lambda * regularizer_gradient(pi);
  return grad;
}

Matrix reinforce_gradient(const Trajectory& traj, const PolicyParams& params, double lambda,
                          double gamma, double beta, std::span<const double> baseline) {
  return reinforce_gradient(traj, softmax_policy(params), lambda, gamma, beta, baseline);
}

Matrix reinforce_gradient(const Trajectory& traj, const PolicyParams& params, double lambda,
                          double gamma, const EstimatorConfig& cfg) {
  if (cfg.baseline == BaselineKind::reinforcement_average)
    throw InvalidArgument("reinforcement-average baseline needs run history; pass a Baseline");
  const Baseline baseline(cfg, params.num_states());
  return reinforce_gradient(traj, params, lambda, gamma, cfg.beta, baseline.values());
}

Matrix minibatch_gradient(std::span<const Trajectory> trajs, const PolicyParams& params,
                          double lambda, double gamma, double beta,
                          std::span<const double> baseline) {
  if (trajs.empty()) throw InvalidArgument("minibatch_gradient: need at least one trajectory");
  const StatePolicy pi = softmax_policy(params);
  Matrix sum = Matrix::Zero(params.num_states(), params.num_actions());
  for (const Trajectory& traj : trajs)
    sum += reinforce_gradient(traj, pi, lambda, gamma, beta, baseline);
  return sum / static_cast<double>(trajs.size());
}

double BoundConstants::delta(long long k) const {
  const double one_minus = 1.0 - gamma;
  return (2.0 / (one_minus * one_minus) + 2.0 * lambda_bar) *
         std::pow(static_cast<double>(k) + 1.0, -2.0 / 3.0);
}

double BoundConstants::beta_lambda(int num_states) const {
  const double one_minus = 1.0 - gamma;
  return 8.0 / (one_minus * one_minus * one_minus) + 2.0 * lambda_bar / num_states;
}

BoundConstants lemma_constants(double gamma, double lambda_bar, double baseline_bound,
                               int batch_size) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("lemma_constants: gamma outside (0,1)");
  if (!(lambda_bar >= 0.0)) throw InvalidArgument("lemma_constants: lambda_bar must be >= 0");
  if (!(baseline_bound >= 0.0)) throw InvalidArgument("lemma_constants: B must be >= 0");
  if (batch_size < 1) throw InvalidArgument("lemma_constants: batch size must be >= 1");

  const double g = 1.0 - gamma;
  const double g2 = g * g;
  const double base = 1.0 / g2 + lambda_bar;
  const double with_b = (1.0 + baseline_bound * g) / g2 + lambda_bar;

  BoundConstants out;
  out.gamma = gamma;
  out.lambda_bar = lambda_bar;
  out.baseline_bound = baseline_bound;
  out.batch_size = batch_size;
  out.C = 16.0 * base * base;
  out.C1 = 2.0 * (1.0 + baseline_bound * g) / g2 + 2.0 * lambda_bar;
  out.C2 = 1.0;
  out.M2 = 2.0;
  out.vbar_upper = 4.0 * with_b * with_b;
  out.M1 = 32.0 / (g2 * g2) + out.vbar_upper / batch_size;
  return out;
}

double bias_bound(double gamma, double beta, int horizon) {
  const double g = 1.0 - gamma;
  return 4.0 * std::pow(gamma, std::min(beta, 1.0 - beta) * horizon) / (g * g);
}

}  // namespace phasedpg
