#pragma once

#include "phasedpg/estimator.hpp"
#include "phasedpg/policy.hpp"
#include "phasedpg/rollout.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace phasedpg {

/// B_T(l, k) = sum_{j<l} T_j + k with T_j = 2^j T0.
long long index_to_global(int phase, long long k, long long T0 = 1);
/// Inverse of index_to_global.
std::pair<int, long long> global_to_index(long long n, long long T0 = 1);

/// beta_lambda = 8/(1-gamma)^3 + 2 lambda / S.
double smoothness_constant(double gamma, double lambda, int num_states);

/// alpha = C / (sqrt(k+3) log2(k+3)).
double step_size(double coefficient, long long k);

/// Hyper-parameter schedule of the phased method:
///   T_l = 2^l T0,  eps^l = T_l^{-1/6},  lambda^l = eps^l (1-gamma)/2,
///   lambda_bar = (1-gamma)/2,  C_{l,alpha} in [1/(2 beta_{lambda_bar}), 1/(2 beta_{lambda^l})].
struct PhasePlan {
  double gamma = 0.9;
  int num_states = 1;
  int num_actions = 1;
  long long T0 = 1;
  /// Fixed C_{l,alpha}; when unset each phase uses 1/(2 beta_{lambda^l}).
  std::optional<double> step_coefficient;
  /// Defaults to 1/(2A).
  std::optional<double> epsilon_pp;
  int batch_size = 1;
  EstimatorConfig estimator;
  /// Row-centre theta after every update (off by default).
  bool recenter = false;

  static PhasePlan defaults_for(const Mdp& m);

  [[nodiscard]] long long phase_length(int l) const;
  [[nodiscard]] double epsilon(int l) const;
  [[nodiscard]] double lambda(int l) const;
  [[nodiscard]] double lambda_bar() const;
  [[nodiscard]] double pp_tolerance() const;
  [[nodiscard]] std::pair<double, double> coefficient_window(int l) const;
  [[nodiscard]] double coefficient(int l) const;
  [[nodiscard]] double step(int l, long long k) const;

  /// Throws InvalidArgument when a schedule invariant fails.
  void validate() const;
};

struct EpisodeLog {
  int phase = 0;
  long long k = 0;
  long long n = 0;  // global step index B_T(l,k)
  int horizon = 0;
  int episodes = 1;  // episodes consumed by this step (M, or the partial remainder)
  double lambda = 0.0;
  double alpha = 0.0;
  double grad_norm = 0.0;
  double truncated_value = 0.0;  // Fhat^{l,k}
  double value = 0.0;            // F(pi_theta)
  double exact_grad_norm = -1.0; // ||grad L_lambda||, -1 when not requested
  bool updated = true;
  double wall_time = 0.0;  // seconds since run start
};

struct RunRecord {
  PolicyParams initial_theta;
  PolicyParams final_theta;
  long long T0 = 1;
  int batch_size = 1;
  std::uint64_t master_seed = 0;
  std::vector<EpisodeLog> episodes;
};

struct RunOptions {
  /// Record ||grad L_lambda(theta)|| at every step (exact, O(S^3)).
  bool log_exact_gradient = false;
  /// Produce batch members on worker threads.
  bool parallel_batch = false;
  /// Called with each trajectory after it is used (e.g. for JSONL dumps).
  std::function<void(const SeedSpec&, const Trajectory&)> on_trajectory;
};

struct SingleRunConfig {
  double lambda = 0.0;
  std::optional<double> step_coefficient;  // default 1/(2 beta_lambda)
  EstimatorConfig estimator;
  bool recenter = false;
};

/// Single-trajectory policy gradient with fixed lambda:
/// theta^{n+1} = theta^n + alpha^n ghat, H^n = horizon_schedule(n).
RunRecord run_single(const Mdp& m, const PolicyParams& theta0, const SingleRunConfig& cfg,
                     long long episodes, std::uint64_t seed, const RunOptions& opts = {});

/// Phased method with post-processing at the start and at every phase boundary.
RunRecord run_phased(const Mdp& m, const PolicyParams& theta0, const PhasePlan& plan,
                     long long total_episodes, std::uint64_t seed, const RunOptions& opts = {});

/// Mini-batch phased method: each step consumes plan.batch_size episodes.
RunRecord run_minibatch(const Mdp& m, const PolicyParams& theta0, const PhasePlan& plan,
                        long long total_episodes, std::uint64_t seed,
                        const RunOptions& opts = {});

}  // namespace phasedpg
