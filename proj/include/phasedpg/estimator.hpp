#pragma once

#include "phasedpg/policy.hpp"
#include "phasedpg/rollout.hpp"

#include <span>
#include <string>
#include <vector>

namespace phasedpg {

enum class BaselineKind { zero, constant, table, reinforcement_average };

std::string to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(const std::string& name);

/// REINFORCE estimator settings. `beta` truncates the outer sum at
/// floor(beta H); every baseline value must satisfy |b(s)| <= baseline_bound.
struct EstimatorConfig {
  double beta = 0.5;
  BaselineKind baseline = BaselineKind::zero;
  double baseline_constant = 0.0;
  std::vector<double> baseline_table;
  double baseline_bound = 0.0;
};

void validate_estimator_config(const EstimatorConfig& cfg, int num_states);

/// Per-state baseline values as seen by one episode.
///
/// For the reinforcement-average kind the table is the running mean of
/// reward-to-go observed at each state over earlier episodes, clipped to
/// [-B, B]; `observe` must be called only after the episode's gradient has
/// been formed.
class Baseline {
 public:
  Baseline(const EstimatorConfig& cfg, int num_states);

  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] double operator()(int s) const { return values_[static_cast<std::size_t>(s)]; }

  void observe(const Trajectory& traj, double gamma, double beta);

 private:
  BaselineKind kind_;
  double bound_;
  std::vector<double> values_;
  std::vector<double> sums_;
  std::vector<long long> counts_;
};

/// sum_{t'=t}^{H} gamma^{t'-t} r_{t'}.
double reward_to_go(const Trajectory& traj, int t, double gamma);
/// All reward-to-go values in a single reverse pass.
std::vector<double> reward_to_go_all(const Trajectory& traj, double gamma);

/// Index of the last term of the outer sum, floor(beta H).
int truncation_index(int horizon, double beta);

/// sum_{t<=floor(beta H)} gamma^t (Qhat_t - b(s_t)) grad log pi(a_t|s_t) + lambda grad R.
Matrix reinforce_gradient(const Trajectory& traj, const PolicyParams& params, double lambda,
                          double gamma, double beta, std::span<const double> baseline);
Matrix reinforce_gradient(const Trajectory& traj, const StatePolicy& pi, double lambda,
                          double gamma, double beta, std::span<const double> baseline);

/// Uses the fixed baseline of `cfg` (zero, constant or table).
Matrix reinforce_gradient(const Trajectory& traj, const PolicyParams& params, double lambda,
                          double gamma, const EstimatorConfig& cfg);

/// Arithmetic mean of per-trajectory estimates.
Matrix minibatch_gradient(std::span<const Trajectory> trajs, const PolicyParams& params,
                          double lambda, double gamma, double beta,
                          std::span<const double> baseline);

/// Constants certifying the estimator's boundedness, near-unbiasedness and
/// second-moment growth.
struct BoundConstants {
  double gamma = 0.0;
  double lambda_bar = 0.0;
  double baseline_bound = 0.0;
  int batch_size = 1;

  double C = 0.0;
  double C1 = 0.0;
  double C2 = 1.0;
  double M1 = 0.0;
  double M2 = 2.0;
  double vbar_upper = 0.0;

  /// delta_{l,k} = (2/(1-gamma)^2 + 2 lambda_bar) (k+1)^{-2/3}
  [[nodiscard]] double delta(long long k) const;
  /// 8/(1-gamma)^3 + 2 lambda_bar / S
  [[nodiscard]] double beta_lambda(int num_states) const;
};

BoundConstants lemma_constants(double gamma, double lambda_bar, double baseline_bound,
                               int batch_size = 1);

/// 4 gamma^{min(beta,1-beta) H} / (1-gamma)^2.
double bias_bound(double gamma, double beta, int horizon);

}  // namespace phasedpg
