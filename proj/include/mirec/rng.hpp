#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace mirec {

/// splitmix64 step; used to derive independent sub-seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Mixes a seed with a stream tag. Streams derived from distinct tags are
/// independent, so per-instance randomness does not depend on batch layout.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + tag);
  splitmix64(s);
  return splitmix64(s);
}

/// Order-sensitive hash of a behavior index list. Seeds the deterministic
/// routing-logit generator used at serving time, so repeated requests for the
/// same behavior sequence produce identical interest vectors.
inline std::uint64_t behavior_hash(std::span<const std::int32_t> behaviors,
                                   std::uint64_t salt) {
  std::uint64_t h = salt ^ 0x517cc1b727220a95ULL;
  for (std::int32_t b : behaviors) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(b));
    h *= 0x100000001b3ULL;
    h ^= h >> 29;
  }
  splitmix64(h);
  return splitmix64(h);
}

/// Deterministic RNG wrapper. The normal sampler is hand-rolled Box-Muller
/// (no cached state), so the draw sequence is stable across standard
/// libraries and never depends on distribution-object internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in (0, 1]; never returns exact 0 so it is safe under log().
  double uniform() {
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  /// Fisher-Yates shuffle with this engine; stable across platforms
  /// (std::shuffle's draw sequence is implementation-defined).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace mirec
