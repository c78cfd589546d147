#include "drf/rng.hpp"

#include <cmath>

namespace drf {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  s ^= a + 0x9E3779B97F4A7C15ULL;
  h ^= splitmix64(s);
  s ^= b + 0xD1B54A32D192ED03ULL;
  h ^= splitmix64(s);
  s ^= c + 0x8BB84B93962EACC9ULL;
  h ^= splitmix64(s);
  return h;
}

Rng Rng::derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                std::uint64_t c) {
  return Rng(mix_seed(seed, a, b, c));
}

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform_pos() {
  // 53 significant bits, mapped to (0, 1].
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_pos();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double Rng::rayleigh(double sigma) {
  return sigma * std::sqrt(-2.0 * std::log(uniform_pos()));
}

double Rng::uniform_range(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

}  // namespace drf
