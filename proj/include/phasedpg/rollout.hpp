#pragma once

#include "phasedpg/mdp.hpp"
#include "phasedpg/policy.hpp"

#include <cstdint>
#include <vector>

namespace phasedpg {

/// Identifies one independent random stream: (master seed, phase, episode,
/// batch member). Equal keys always produce equal streams.
struct SeedSpec {
  std::uint64_t master = 0;
  std::uint64_t phase = 0;
  std::uint64_t episode = 0;
  std::uint64_t index = 0;

  [[nodiscard]] SeedSpec with_index(std::uint64_t i) const { return {master, phase, episode, i}; }
};

/// SplitMix64 stream. Uniforms use the top 53 bits, so draws are identical
/// on every platform.
class StreamRng {
 public:
  explicit StreamRng(std::uint64_t state) : state_(state) {}
  explicit StreamRng(const SeedSpec& seed);

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_zero() { return 1.0 - uniform(); }

 private:
  std::uint64_t state_;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_stream_key(const SeedSpec& seed);

/// Inverse-CDF draw over `weights` scanned in index order. The last index
/// with positive weight absorbs round-off.
template <typename Row>
int sample_categorical(const Row& weights, double u) {
  const auto n = static_cast<int>(weights.size());
  double cumulative = 0.0;
  int last_positive = -1;
  for (int i = 0; i < n; ++i) {
    const double w = weights(i);
    if (w <= 0.0) continue;
    last_positive = i;
    cumulative += w;
    if (u < cumulative) return i;
  }
  return last_positive;
}

struct Trajectory {
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<double> rewards;

  /// H; the trajectory holds H + 1 steps.
  [[nodiscard]] int horizon() const { return static_cast<int>(states.size()) - 1; }
};

/// H = max(1, ceil(2 log_{1/gamma}(8(k+1)/(1-gamma)^3) / (3 min{beta, 1-beta}))).
int horizon_schedule(long long episode, double gamma, double beta);

Trajectory sample_trajectory(const Mdp& m, const StatePolicy& pi, int horizon, const SeedSpec& seed);
Trajectory sample_trajectory(const Mdp& m, const PolicyParams& params, int horizon,
                             const SeedSpec& seed);

/// M trajectories from streams seed.with_index(0..M-1). With `parallel` the
/// members are produced on worker threads; the result is bitwise identical.
std::vector<Trajectory> sample_batch(const Mdp& m, const PolicyParams& params, int horizon,
                                     int batch_size, const SeedSpec& seed, bool parallel = false);

}  // namespace phasedpg
