#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rtp {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for stream `stream` of master seed `seed`. Replica i of a run always
/// gets derive_seed(seed, i), so results do not depend on the worker count.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(derive_seed(seed, stream));
}

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by multiply-high (bias < n / 2^64).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

inline double exponential(Rng& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

inline long poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<long> dist(mean);
  return dist(rng);
}

inline int binomial_bernoulli(Rng& rng, int trials, double p) {
  int k = 0;
  for (int i = 0; i < trials; ++i) k += uniform01(rng) < p ? 1 : 0;
  return k;
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace rtp
