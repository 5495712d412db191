#include "phasedpg/regret.hpp"

#include <cmath>
#include <sstream>

namespace phasedpg {

void RegretLedger::append(const LedgerEntry& e) {
  if (e.n != size()) {
    std::ostringstream os;
    os << "ledger is append-only in global order: expected step " << size() << ", got " << e.n;
    throw InvalidArgument(os.str());
  }
  entries.push_back(e);
}

double episode_gap(const Mdp& m, const PolicyParams& params, int horizon, double optimal_value) {
  return optimal_value - truncated_value(m, softmax_policy(params), horizon);
}

RegretLedger build_ledger(const RunRecord& record, double optimal_value) {
  RegretLedger ledger;
  ledger.T0 = record.T0;
  ledger.batch_size = record.batch_size;
  ledger.optimal_value = optimal_value;
  ledger.entries.reserve(record.episodes.size());
  for (const EpisodeLog& log : record.episodes) {
    ledger.append({log.n, log.phase, log.k, log.horizon, log.episodes,
                   optimal_value - log.truncated_value, log.value});
  }
  return ledger;
}

double cumulative_regret(const RegretLedger& ledger, long long N) {
  if (N < 0) throw InvalidArgument("cumulative_regret: N must be nonnegative");
  if (N >= ledger.size()) {
    std::ostringstream os;
    os << "cumulative_regret: ledger covers steps 0.." << ledger.size() - 1 << ", need " << N;
    throw InvalidArgument(os.str());
  }
  double total = 0.0;
  for (long long n = 0; n <= N; ++n) total += ledger.entries[static_cast<std::size_t>(n)].gap;
  return total;
}

double phase_regret(const RegretLedger& ledger, int phase, long long K) {
  if (phase < 0) throw InvalidArgument("phase_regret: phase must be nonnegative");
  const long long length = (1LL << phase) * ledger.T0;
  if (K < 0 || K >= length) {
    std::ostringstream os;
    os << "phase_regret: K = " << K << " outside [0, " << length - 1 << "]";
    throw InvalidArgument(os.str());
  }
  const long long first = index_to_global(phase, 0, ledger.T0);
  if (first + K >= ledger.size()) throw InvalidArgument("phase_regret: ledger too short");
  double total = 0.0;
  for (long long k = 0; k <= K; ++k) total += ledger.entries[static_cast<std::size_t>(first + k)].gap;
  return total;
}

double minibatch_regret(const RegretLedger& ledger, long long N, int M) {
  if (M < 1) throw InvalidArgument("minibatch_regret: M must be >= 1");
  if (M != ledger.batch_size) {
    std::ostringstream os;
    os << "minibatch_regret: ledger was recorded with M = " << ledger.batch_size << ", not " << M;
    throw InvalidArgument(os.str());
  }
  if (N < 0) throw InvalidArgument("minibatch_regret: N must be nonnegative");
  const long long count = N + 1;
  const long long full = count / M;
  const long long partial = count - static_cast<long long>(M) * full;
  const long long needed = full + (partial > 0 ? 1 : 0);
  if (needed > ledger.size()) throw InvalidArgument("minibatch_regret: ledger too short");

  double total = 0.0;
  for (long long n = 0; n < full; ++n)
    total += static_cast<double>(M) * ledger.entries[static_cast<std::size_t>(n)].gap;
  if (partial > 0)
    total += static_cast<double>(partial) * ledger.entries[static_cast<std::size_t>(full)].gap;
  return total;
}

double log_log_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidArgument("log_log_slope: size mismatch");
  if (xs.size() < 2) throw InvalidArgument("log_log_slope: need at least two points");
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(xs.size()), ly(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw InvalidArgument("log_log_slope: degenerate checkpoints (nonpositive value)");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw InvalidArgument("log_log_slope: degenerate checkpoints (all equal)");
  return sxy / sxx;
}

double average_regret_slope(const RegretLedger& ledger, std::span<const long long> checkpoints) {
  std::vector<double> xs, ys;
  xs.reserve(checkpoints.size());
  ys.reserve(checkpoints.size());
  for (long long N : checkpoints) {
    xs.push_back(static_cast<double>(N));
    ys.push_back(cumulative_regret(ledger, N));
  }
  return log_log_slope(xs, ys);
}

double BoundReport::regret_bound(long long N, double delta) const {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("regret_bound: delta outside (0,1)");
  const double n = static_cast<double>(N);
  const double g = 1.0 - gamma;
  const double log_term = (std::log2(n + 1.0) + 2.0) * std::log(2.0) + std::log(1.0 / delta);
  const double r1 = (4.0 * (D_tilde + std::sqrt(2.0 * C_tilde * log_term)) / (g * E_lower) + mismatch) *
                    std::pow(n + 1.0, 5.0 / 6.0) * std::pow(std::log2(2.0 * n + 3.0), 2.0);
  const double r2 = gamma * std::pow(std::log2(n + 1.0) + 1.0, 2.0) / g;
  return r1 + r2;
}

BoundReport bound_report(const Mdp& m, const PhasePlan& plan, int num_phases,
                         std::span<const double> phase_start_gaps) {
  validate_mdp(m);
  plan.validate();
  const double gamma = m.discount;
  const double g = 1.0 - gamma;
  const double S = m.num_states;
  const double A = m.num_actions;
  const double lambda_bar = plan.lambda_bar();
  const BoundConstants k = lemma_constants(gamma, lambda_bar, plan.estimator.baseline_bound, plan.batch_size);

  BoundReport out;
  out.gamma = gamma;
  out.beta_lambda_bar = smoothness_constant(gamma, lambda_bar, m.num_states);
  const double c_lower = 1.0 / (2.0 * out.beta_lambda_bar);
  out.E_lower = c_lower * g * g / (16.0 * S * S * A * A);
  const double g6 = std::pow(g, 6.0);
  const double base = 1.0 / (g * g) + lambda_bar;
  out.D_tilde = g6 * base * base +
                g6 * out.beta_lambda_bar * (32.0 / std::pow(g, 4.0) + k.vbar_upper / plan.batch_size) / 256.0 +
                1.0 / g + std::log(2.0 * A);
  const double w4 = std::pow((1.0 + plan.estimator.baseline_bound * g) / (g * g) + lambda_bar, 4.0);
  out.C_tilde = out.beta_lambda_bar * out.beta_lambda_bar * std::pow(g, 12.0) * w4 / 8192.0 + 0.5 * g6 * w4;
  out.mismatch = mismatch_coefficient(m);

  const double default_gap = 1.0 / g + std::log(1.0 / plan.pp_tolerance());
  for (int l = 0; l < num_phases; ++l) {
    BoundReport::Phase ph;
    ph.phase = l;
    ph.lambda = plan.lambda(l);
    ph.beta_lambda = smoothness_constant(gamma, ph.lambda, m.num_states);
    ph.coefficient = plan.coefficient(l);
    const double c = ph.coefficient;
    ph.E = c * g * g / (16.0 * S * S * A * A);
    const double inner = 1.0 / (g * g) + ph.lambda;
    ph.C = 32.0 * k.C1 * k.C1 * c * c * inner * inner +
           ph.beta_lambda * ph.beta_lambda * std::pow(k.C1, 4.0) * std::pow(c, 4.0) / 2.0;
    const double start_gap = static_cast<std::size_t>(l) < phase_start_gaps.size()
                                 ? phase_start_gaps[static_cast<std::size_t>(l)]
                                 : default_gap;
    ph.D = k.C * c * c + ph.beta_lambda * k.M1 * c * c + start_gap;
    out.phases.push_back(ph);
  }
  return out;
}

}  // namespace phasedpg
