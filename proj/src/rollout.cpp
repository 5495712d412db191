#include "phasedpg/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>
#include <thread>

namespace phasedpg {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_stream_key(const SeedSpec& seed) {
  // Distinct odd multipliers per field keep (l,k,i) permutations apart.
  std::uint64_t key = mix64(seed.master);
  key = mix64(key ^ (seed.phase * 0xd1b54a32d192ed03ULL));
  key = mix64(key ^ (seed.episode * 0xaef17502108ef2d9ULL));
  key = mix64(key ^ (seed.index * 0xf58e2f4bb6f3a9c5ULL));
  return key;
}

StreamRng::StreamRng(const SeedSpec& seed) : state_(derive_stream_key(seed)) {}

std::uint64_t StreamRng::next_u64() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double StreamRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int horizon_schedule(long long episode, double gamma, double beta) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    std::ostringstream os;
    os << "horizon_schedule: gamma must lie in (0,1), got " << gamma;
    throw InvalidArgument(os.str());
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    std::ostringstream os;
    os << "horizon_schedule: beta must lie in (0,1), got " << beta;
    throw InvalidArgument(os.str());
  }
  if (episode < 0) throw InvalidArgument("horizon_schedule: episode index must be nonnegative");

  const double k1 = static_cast<double>(episode) + 1.0;
  const double log_inv_gamma = -std::log(gamma);
  const double one_minus = 1.0 - gamma;
  const double bound = 2.0 * std::log(8.0 * k1 / (one_minus * one_minus * one_minus)) /
                       log_inv_gamma / (3.0 * std::min(beta, 1.0 - beta));
  const double floor_bound = std::log(k1) / log_inv_gamma;
  const double h = std::ceil(std::max(bound, floor_bound));
  return std::max(1, static_cast<int>(h));
}

Trajectory sample_trajectory(const Mdp& m, const StatePolicy& pi, int horizon,
                             const SeedSpec& seed) {
  if (horizon < 0) throw InvalidArgument("sample_trajectory: horizon must be nonnegative");
  StreamRng rng(seed);
  Trajectory traj;
  const auto steps = static_cast<std::size_t>(horizon) + 1;
  traj.states.reserve(steps);
  traj.actions.reserve(steps);
  traj.rewards.reserve(steps);

  int s = sample_categorical(m.initial_dist, rng.uniform());
  for (std::size_t t = 0; t < steps; ++t) {
    const int a = sample_categorical(pi.probs.row(s), rng.uniform());
    traj.states.push_back(s);
    traj.actions.push_back(a);
    traj.rewards.push_back(m.rewards(s, a));
    if (t + 1 < steps) s = sample_categorical(m.transition_row(s, a), rng.uniform());
  }
  return traj;
}

Trajectory sample_trajectory(const Mdp& m, const PolicyParams& params, int horizon,
                             const SeedSpec& seed) {
  return sample_trajectory(m, softmax_policy(params), horizon, seed);
}

std::vector<Trajectory> sample_batch(const Mdp& m, const PolicyParams& params, int horizon,
                                     int batch_size, const SeedSpec& seed, bool parallel) {
  if (batch_size < 1) throw InvalidArgument("sample_batch: batch size must be at least 1");
  const StatePolicy pi = softmax_policy(params);
  std::vector<Trajectory> out(static_cast<std::size_t>(batch_size));
  const auto produce = [&](std::size_t i) {
    out[i] = sample_trajectory(m, pi, horizon, seed.with_index(i));
  };

  const unsigned workers = std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                                               static_cast<unsigned>(batch_size));
  if (!parallel || workers <= 1) {
    for (std::size_t i = 0; i < out.size(); ++i) produce(i);
    return out;
  }
  std::vector<std::future<void>> jobs;
  jobs.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < out.size(); i += workers) produce(i);
    }));
  }
  for (auto& job : jobs) job.get();
  return out;
}

}  // namespace phasedpg
