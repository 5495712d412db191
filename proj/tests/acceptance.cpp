// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and time
// limits are fixed here and printed with each result.

#include "phasedpg/environments.hpp"
#include "phasedpg/harness.hpp"
#include "phasedpg/oracle.hpp"
#include "phasedpg/regret.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace phasedpg;
using namespace phasedpg::testing;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double time_limit;  // seconds
  std::function<Outcome()> body;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

PolicyParams random_params(std::mt19937_64& rng, int S, int A, double scale = 2.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix t(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) t(s, a) = u(rng);
  return PolicyParams(t);
}

// Instances small enough to enumerate at H <= 4.
std::vector<Mdp> enumerable_corpus() {
  std::vector<Mdp> out;
  out.push_back(single_state({1.0, 0.0}, 0.5));
  out.push_back(single_state({0.2, 0.9}, 0.9));
  out.push_back(two_state_switch(0.5));
  out.push_back(two_state_switch(0.9));
  out.push_back(make_random(2, 2, 0.5, 1));
  out.push_back(make_random(2, 2, 0.9, 2));
  return out;
}

Outcome gradient_agreement() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int cases = 0;
  for (int i = 0; i < 10; ++i) {
    const int S = 1 + i % 5;
    const int A = 1 + (i * 3 + 1) % 5;
    const double gamma = i % 2 == 0 ? 0.5 : 0.9;
    const Mdp m = make_random(S, A, gamma, 100 + i);
    const PolicyParams p = random_params(rng, S, A);
    for (double lambda : {0.0, 0.1}) {
      const Matrix exact = exact_regularized_gradient(m, p, lambda);
      const Matrix fd = finite_difference_gradient(m, p, lambda, 1e-5);
      worst = std::max(worst, gradient_relative_error(exact, fd));
      ++cases;
    }
  }
  return {worst <= 1e-4, fmt("%d cases, max relative error %.3e (tol 1e-4)", cases, worst)};
}

Outcome bias_bound_check() {
  std::mt19937_64 rng(7);
  std::vector<Mdp> instances{single_state({1.0, 0.0}, 0.5), two_state_switch(0.5), single_state({0.3, 0.8}, 0.9),
                             make_random(2, 2, 0.9, 3)};
  double worst_ratio = 0.0;
  int violations = 0, cases = 0;
  for (const Mdp& m : instances) {
    const PolicyParams p = random_params(rng, m.num_states, m.num_actions);
    for (double lambda : {0.0, 0.1})
      for (int H : {2, 3, 4}) {
        EstimatorConfig cfg;
        cfg.beta = 0.5;
        const EnumerationReport r = enumerate_estimator(m, p, lambda, cfg, H);
        const double bias = (r.mean_gradient - exact_regularized_gradient(m, p, lambda)).norm();
        const double bound = bias_bound(m.discount, 0.5, H);
        if (bias > bound + 1e-9) ++violations;
        worst_ratio = std::max(worst_ratio, bias / bound);
        ++cases;
      }
  }
  return {violations == 0, fmt("%d cases, %d violations, max bias/bound %.3f (slack 1e-9)", cases, violations,
                               worst_ratio)};
}

Outcome norm_bound_check() {
  std::vector<Mdp> corpus = enumerable_corpus();
  corpus.push_back(make_chain(3, 0.9));
  corpus.push_back(make_random(4, 3, 0.8, 9));
  corpus.push_back(make_gridworld(2, 2, 0.9, 0.1));
  const long long total = 100000;
  const long long per = total / static_cast<long long>(corpus.size()) + 1;
  std::mt19937_64 rng(11);
  long long samples = 0, violations = 0;
  double worst_ratio = 0.0;
  for (std::size_t idx = 0; idx < corpus.size(); ++idx) {
    const Mdp& m = corpus[idx];
    const double lambda_bar = (1.0 - m.discount) / 2.0;
    const double B = 1.0 / (1.0 - m.discount);
    const double C1 = lemma_constants(m.discount, lambda_bar, B).C1;
    // Baseline at -B maximises |Qhat - b|; lambda = lambda_bar is the largest in use.
    const std::vector<double> baseline(static_cast<std::size_t>(m.num_states), -B);
    for (long long i = 0; i < per && samples < total; ++i, ++samples) {
      const PolicyParams p = random_params(rng, m.num_states, m.num_actions, 4.0);
      const int H = horizon_schedule(i % 64, m.discount, 0.5);
      const Trajectory t =
          sample_trajectory(m, p, H, SeedSpec{31, idx, static_cast<std::uint64_t>(i), 0});
      const double norm = reinforce_gradient(t, p, lambda_bar, m.discount, 0.5, baseline).norm();
      if (norm > C1) ++violations;
      worst_ratio = std::max(worst_ratio, norm / C1);
    }
  }
  return {violations == 0 && samples == total,
          fmt("%lld samples, %lld violations, max norm/C1 %.3f", samples, violations, worst_ratio)};
}

Outcome baseline_zero_mean() {
  std::mt19937_64 rng(13);
  double worst = 0.0;
  int cases = 0;
  for (const Mdp& m : enumerable_corpus()) {
    const PolicyParams p = random_params(rng, m.num_states, m.num_actions);
    for (int H : {2, 3}) {
      EstimatorConfig zero;
      EstimatorConfig shifted;
      shifted.baseline = BaselineKind::constant;
      shifted.baseline_constant = 0.7;
      shifted.baseline_bound = 0.7;
      const Matrix a = enumerate_estimator(m, p, 0.1, zero, H).mean_gradient;
      const Matrix b = enumerate_estimator(m, p, 0.1, shifted, H).mean_gradient;
      worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
      ++cases;
    }
  }
  return {worst <= 1e-10, fmt("%d cases, max |E[g|c=0.7] - E[g|c=0]| = %.3e (tol 1e-10)", cases, worst)};
}

Outcome second_moment_growth() {
  MdpGenerator gen(17);
  int violations = 0;
  double worst_ratio = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int S = gen.integer(1, 2), A = gen.integer(1, 3);
    const double gamma = i % 2 == 0 ? 0.5 : 0.9;
    const Mdp m = gen.mdp(S, A, gamma);
    const PolicyParams p = gen.params(S, A);
    const double lambda_bar = (1.0 - gamma) / 2.0;
    const double B = 0.7;
    EstimatorConfig cfg;
    cfg.baseline = BaselineKind::constant;
    cfg.baseline_constant = B;
    cfg.baseline_bound = B;
    const EnumerationReport r = enumerate_estimator(m, p, lambda_bar, cfg, 3);
    const Matrix grad = exact_regularized_gradient(m, p, lambda_bar);
    const BoundConstants k = lemma_constants(gamma, lambda_bar, B);
    if (!check_second_moment(r, grad, k)) ++violations;
    worst_ratio = std::max(worst_ratio, r.second_moment / (k.M1 + 2.0 * grad.squaredNorm()));
  }
  return {violations == 0, fmt("20 instances, %d violations, max E||g||^2 / (M1 + 2||grad||^2) = %.3e",
                               violations, worst_ratio)};
}

Outcome gradient_domination_trace() {
  const Mdp m = make_chain(3, 0.9);
  const PhasePlan plan = PhasePlan::defaults_for(m);
  RunOptions opts;
  opts.log_exact_gradient = true;
  const long long N = 1LL << 13;
  const RunRecord record = run_phased(m, PolicyParams::zeros(3, 2), plan, N, 1, opts);
  const OptimalSolution opt = solve_optimal(m);
  const double mismatch = mismatch_coefficient(m, opt.policy);
  const double SA = m.num_states * m.num_actions;
  long long qualifying = 0, violations = 0;
  double min_ratio = 1e300;
  for (const EpisodeLog& log : record.episodes) {
    const double threshold = log.lambda / (2.0 * SA);
    min_ratio = std::min(min_ratio, log.exact_grad_norm / threshold);
    if (log.exact_grad_norm > threshold) continue;
    ++qualifying;
    if (opt.value - log.value > 2.0 * log.lambda / (1.0 - m.discount) * mismatch) ++violations;
  }
  return {violations == 0,
          fmt("%lld episodes, %lld with ||grad L|| <= lambda/(2SA), %lld violations; "
              "min ||grad L|| / threshold = %.1f",
              N, qualifying, violations, min_ratio)};
}

struct TrendResult {
  double median_avg_small = 0.0;
  double median_avg_large = 0.0;
  std::vector<double> slopes;
};

TrendResult regret_trend() {
  const Mdp m = make_chain(3, 0.9);
  const PhasePlan plan = PhasePlan::defaults_for(m);
  const double fstar = solve_optimal(m).value;
  const long long N = 1LL << 13;
  std::vector<double> small, large;
  TrendResult out;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RunRecord record = run_phased(m, PolicyParams::zeros(3, 2), plan, N, seed);
    const RegretLedger ledger = build_ledger(record, fstar);
    // Average regret after n episodes: cumulative over steps 0..n-1, divided by n.
    small.push_back(cumulative_regret(ledger, (1LL << 7) - 1) / static_cast<double>(1LL << 7));
    large.push_back(cumulative_regret(ledger, N - 1) / static_cast<double>(N));
    std::vector<double> xs, ys;
    for (int e = 10; e <= 13; ++e) {
      xs.push_back(static_cast<double>(1LL << e));
      ys.push_back(cumulative_regret(ledger, (1LL << e) - 1));
    }
    out.slopes.push_back(log_log_slope(xs, ys));
  }
  std::sort(small.begin(), small.end());
  std::sort(large.begin(), large.end());
  out.median_avg_small = small[2];
  out.median_avg_large = large[2];
  return out;
}

TrendResult& trend_cache() {
  static TrendResult cached = regret_trend();
  return cached;
}

Outcome trend_average() {
  const TrendResult& t = trend_cache();
  return {t.median_avg_large < t.median_avg_small,
          fmt("median average regret: N=2^7 %.6f, N=2^13 %.6f", t.median_avg_small, t.median_avg_large)};
}

Outcome trend_slope() {
  const TrendResult& t = trend_cache();
  int below = 0;
  std::string list;
  for (double s : t.slopes) {
    if (s < 0.98) ++below;
    list += fmt(" %.5f", s);
  }
  return {below >= 4, fmt("slopes over [2^10, 2^13]:%s; %d of 5 below 0.98 (need 4)", list.c_str(), below)};
}

Outcome minibatch_consistency() {
  const Mdp m = make_chain(3, 0.9);
  const PhasePlan plan = PhasePlan::defaults_for(m);
  const long long N = 2000;
  const RunRecord a = run_phased(m, PolicyParams::zeros(3, 2), plan, N, 42);
  const RunRecord b = run_minibatch(m, PolicyParams::zeros(3, 2), plan, N, 42);
  bool identical = a.episodes.size() == b.episodes.size() && a.final_theta.theta == b.final_theta.theta;
  for (std::size_t i = 0; identical && i < a.episodes.size(); ++i) {
    const EpisodeLog& x = a.episodes[i];
    const EpisodeLog& y = b.episodes[i];
    identical = x.grad_norm == y.grad_norm && x.value == y.value && x.truncated_value == y.truncated_value &&
                x.alpha == y.alpha && x.horizon == y.horizon;
  }
  const RegretLedger ledger = build_ledger(b, solve_optimal(m).value);
  long long mismatches = 0;
  for (long long n = 0; n < N; ++n)
    if (minibatch_regret(ledger, n, 1) != cumulative_regret(ledger, n)) ++mismatches;
  return {identical && mismatches == 0,
          fmt("%lld steps, runs bitwise identical: %s, minibatch_regret(N,1) != cumulative_regret(N) at %lld N",
              N, identical ? "yes" : "no", mismatches)};
}

Outcome schedule_table() {
  const Mdp m = make_chain(3, 0.9);
  const PhasePlan plan = PhasePlan::defaults_for(m);
  const double g = 1.0 - m.discount;
  const double S = m.num_states;
  int mismatches = 0;
  double worst = 0.0;
  const auto rel = [&](double got, double want) {
    const double e = std::abs(got - want) / std::abs(want);
    worst = std::max(worst, e);
    if (e > 4e-16) ++mismatches;
  };
  for (int l = 0; l <= 12; ++l) {
    const long long T = 1LL << l;
    if (plan.phase_length(l) != T) ++mismatches;
    // eps^l = T_l^{-1/6} = 2^{-l/6}: exact dyadic values at l = 0, 6, 12.
    const double eps = l % 6 == 0 ? 1.0 / static_cast<double>(1LL << (l / 6)) : std::exp2(-l / 6.0);
    if (l % 6 == 0 && plan.epsilon(l) != eps) ++mismatches;
    rel(plan.epsilon(l), eps);
    rel(plan.lambda(l), eps * g / 2.0);
    if (plan.pp_tolerance() != 1.0 / (2.0 * m.num_actions)) ++mismatches;
    const auto [lo, hi] = plan.coefficient_window(l);
    rel(lo, 1.0 / (2.0 * (8.0 / (g * g * g) + 2.0 * (g / 2.0) / S)));
    rel(hi, 1.0 / (2.0 * (8.0 / (g * g * g) + 2.0 * (eps * g / 2.0) / S)));
    if (!(lo <= hi)) ++mismatches;
  }
  return {mismatches == 0, fmt("l = 0..12, %d mismatches, max relative deviation %.1e (tol 4e-16)", mismatches,
                               worst)};
}

Outcome stitching() {
  const Mdp m = make_random(3, 2, 0.9, 21);
  const PhasePlan plan = PhasePlan::defaults_for(m);
  const long long N = 1500;
  const RegretLedger ledger =
      build_ledger(run_phased(m, PolicyParams::zeros(3, 2), plan, N, 3), solve_optimal(m).value);
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<long long> pick(0, N - 1);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const long long n = pick(rng);
    const auto [l, k] = global_to_index(n, ledger.T0);
    double stitched = 0.0;
    for (int j = 0; j < l; ++j) stitched += phase_regret(ledger, j, plan.phase_length(j) - 1);
    stitched += phase_regret(ledger, l, k);
    worst = std::max(worst, std::abs(stitched - cumulative_regret(ledger, n)));
  }
  return {worst <= 1e-9, fmt("100 stop points, max |difference| %.3e (tol 1e-9)", worst)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"1", "exact gradient vs finite differences", 5.0, gradient_agreement},
      {"2", "truncation bias bound (enumeration)", 10.0, bias_bound_check},
      {"3", "estimate norm bound C1 (1e5 samples)", 30.0, norm_bound_check},
      {"4", "baseline leaves the mean unchanged", 10.0, baseline_zero_mean},
      {"5", "second-moment growth bound", 30.0, second_moment_growth},
      {"6", "gradient domination along a phased run", 60.0, gradient_domination_trace},
      {"7a", "average regret decreases (chain, 5 seeds)", 600.0, trend_average},
      {"7b", "cumulative regret log-log slope < 0.98", 600.0, trend_slope},
      {"8", "mini-batch M=1 consistency", 60.0, minibatch_consistency},
      {"9", "schedule golden table", 1.0, schedule_table},
      {"10", "regret stitching identity", 1.0, stitching},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.time_limit;
    const bool ok = o.passed && in_time;
    if (!ok) ++failures;
    std::printf("[%s] criterion %-3s %s: %s; %.2f s (limit %.0f s)%s\n", ok ? "PASS" : "FAIL", c.id.c_str(),
                c.title.c_str(), o.detail.c_str(), secs, c.time_limit, in_time ? "" : " TIME EXCEEDED");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
