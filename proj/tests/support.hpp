#pragma once

#include "etcon/networks.hpp"
#include "etcon/rng.hpp"
#include "etcon/triggers.hpp"

namespace etcon::testing {

inline Digraph<double> net(int id) { return build_digraph(benchmark_network<double>(id)); }

/// Uniform on (-5, 5), reproducible per (seed, run).
inline Vector<double> random_state(std::uint64_t seed, std::uint64_t run, Index n = 5) {
  SplitMix64 rng(substream_key(seed, run));
  Vector<double> x(n);
  for (Index i = 0; i < n; ++i) x(i) = 10 * rng.uniform_open() - 5;
  return x;
}

/// The law used throughout the acceptance runs: sigma = 0.5, safe gains.
inline TriggerLaw<double> standard_law(const Digraph<double>& g, LawKind kind, double lambda = 0.5,
                                       double sigma = 0.5) {
  const Vector<double> s = Vector<double>::Constant(g.size(), sigma);
  return validate_and_derive(g, LawSettings<double>{kind, lambda, s, safe_gain(g), safe_gain(g), std::nullopt});
}

}  // namespace etcon::testing
