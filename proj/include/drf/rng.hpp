#pragma once

#include <cstdint>

namespace drf {

// Counter-based deterministic RNG. All stochastic draws in the library go
// through this generator so that results are bit-identical across platforms
// (std::normal_distribution and friends are implementation-defined).
//
// Streams are derived, never shared: a sample drawn for (seed, epoch, index)
// is regenerated exactly by re-deriving the same stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Derive an independent child stream from a label path.
  static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0);

  std::uint64_t next_u64();

  // Uniform on (0, 1]: never returns 0, so log(u) is always finite.
  double uniform_pos();

  // Uniform on [0, 1).
  double uniform();

  // Standard normal via Box-Muller on the uniform stream. Draws are
  // generated in pairs; the spare is cached.
  double normal();

  // Rayleigh with scale sigma via inverse CDF: sigma * sqrt(-2 ln u).
  double rayleigh(double sigma);

  // Uniform on [lo, hi).
  double uniform_range(double lo, double hi);

  bool bit() { return (next_u64() >> 63) != 0; }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// SplitMix64 mixing step, also used for seed derivation and checksums.
std::uint64_t splitmix64(std::uint64_t& state);

// Stateless hash of up to four words; used to derive per-sample seeds from
// (experiment_seed, epoch, index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

}  // namespace drf
