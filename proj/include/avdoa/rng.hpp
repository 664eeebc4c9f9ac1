#pragma once

#include <cstdint>
#include <random>

namespace avdoa {

// Seeded generator whose output is fully specified: the 64-bit Mersenne
// Twister is standardized, and the uniform/normal transforms are done here
// rather than through <random> distributions (whose algorithms differ
// between standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Box-Muller; the second variate is cached.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finalizer; used to derive independent per-frame/per-source
// streams from one user seed so results do not depend on iteration order.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace avdoa
