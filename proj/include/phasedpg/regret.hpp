#pragma once

#include "phasedpg/estimator.hpp"
#include "phasedpg/optimizer.hpp"

#include <span>
#include <vector>

namespace phasedpg {

struct LedgerEntry {
  long long n = 0;  // global step index
  int phase = 0;
  long long k = 0;
  int horizon = 0;
  int episodes = 1;  // episodes this step stands for in mini-batch regret
  double gap = 0.0;  // F* - Fhat^{l,k}
  double value = 0.0;
};

/// Append-only record of per-step suboptimality, indexed by the global step n.
struct RegretLedger {
  long long T0 = 1;
  int batch_size = 1;
  double optimal_value = 0.0;
  std::vector<LedgerEntry> entries;

  void append(const LedgerEntry& e);
  [[nodiscard]] long long size() const { return static_cast<long long>(entries.size()); }
};

/// F* - truncated_value(m, softmax(theta), H).
double episode_gap(const Mdp& m, const PolicyParams& params, int horizon, double optimal_value);

RegretLedger build_ledger(const RunRecord& record, double optimal_value);

/// sum of gaps over all (l,k) with B_T(l,k) <= N.
double cumulative_regret(const RegretLedger& ledger, long long N);

/// sum_{k=0}^{K} gap_{l,k}.
double phase_regret(const RegretLedger& ledger, int phase, long long K);

/// Mini-batch regret over episodes 0..N: every complete step of M episodes
/// contributes M gap_{l,k}; the trailing partial step contributes
/// (N+1 - M floor((N+1)/M)) gap at G_T(floor((N+1)/M)).
double minibatch_regret(const RegretLedger& ledger, long long N, int M);

/// Least-squares slope of log y against log x.
double log_log_slope(std::span<const double> xs, std::span<const double> ys);

/// Slope of log cumulative_regret(N) against log N over the checkpoints.
double average_regret_slope(const RegretLedger& ledger, std::span<const long long> checkpoints);

/// Bound-reporting constants for the phased method under REINFORCE.
/// None of these is asserted to be tight.
struct BoundReport {
  double gamma = 0.0;
  double beta_lambda_bar = 0.0;
  double E_lower = 0.0;    // C_alpha_lower (1-gamma)^2 / (16 S^2 A^2)
  double D_tilde = 0.0;
  double C_tilde = 0.0;
  double mismatch = 0.0;

  struct Phase {
    int phase = 0;
    double lambda = 0.0;
    double beta_lambda = 0.0;
    double coefficient = 0.0;
    double E = 0.0;
    double C = 0.0;
    double D = 0.0;  // uses F* - L_{lambda^l}(theta^{l,0}) when provided
  };
  std::vector<Phase> phases;

  /// R1~(N) + R2~(N) at confidence delta.
  [[nodiscard]] double regret_bound(long long N, double delta) const;
};

/// `phase_start_gaps[l]` = F* - L_{lambda^l}(theta^{l,0}); phases without an
/// entry use the uniform upper bound 1/(1-gamma) + log(1/eps_pp).
BoundReport bound_report(const Mdp& m, const PhasePlan& plan, int num_phases,
                         std::span<const double> phase_start_gaps = {});

}  // namespace phasedpg
