#pragma once

#include <cstdint>

#include "etcon/graph.hpp"

namespace etcon {

/// SplitMix64 finaliser (Steele, Lea and Flood, 2014).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/**
 * Counter-based SplitMix64 stream: draw k (k = 0, 1, ...) is
 * mix64(key + (k + 1) * 0x9E3779B97F4A7C15). Any draw can be recomputed from
 * (key, k) alone, which is what makes sweeps reproducible in any language.
 */
class SplitMix64 {
public:
  explicit constexpr SplitMix64(std::uint64_t key) : state_(key) {}

  constexpr std::uint64_t next() {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  /// Uniform on the open interval (0, 1): (top 53 bits + 0.5) / 2^53.
  constexpr double uniform_open() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

private:
  std::uint64_t state_;
};

/// Stream key of Monte-Carlo repetition `run` under scenario seed `seed`.
constexpr std::uint64_t substream_key(std::uint64_t seed, std::uint64_t run) {
  return mix64(mix64(seed) ^ (run * kGoldenGamma + 0x632BE59BD9B4E019ULL));
}

/// n drifts uniform on (lo, hi) from the run's stream.
inline Vector<double> random_drifts(std::uint64_t seed, std::uint64_t run, Index n, double lo = 0.7,
                                    double hi = 1.3) {
  SplitMix64 rng(substream_key(seed, run));
  Vector<double> g(n);
  for (Index i = 0; i < n; ++i) g(i) = lo + (hi - lo) * rng.uniform_open();
  return g;
}

}  // namespace etcon
