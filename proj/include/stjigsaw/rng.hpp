#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace stj {

/// Deterministic random source. All sampling helpers below avoid
/// std::*_distribution, whose output is implementation-defined; results
/// are bit-stable across standard libraries for a fixed seed.
using Rng = std::mt19937_64;

/// splitmix64 finalizer, used to derive well-separated seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a stream id.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix64(base ^ mix64(stream + 1));
}

/// Uniform integer in [0, n). Rejection sampling, bias-free.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Uniform real in [0, 1) with 53 bits of mantissa.
inline double uniform_real01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform real in [lo, hi).
inline double uniform_real(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_real01(rng);
}

/// Standard normal via Box-Muller (no cached spare; one value per call).
inline double normal01(Rng& rng) {
  double u1 = uniform_real01(rng);
  double u2 = uniform_real01(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// In-place Fisher-Yates shuffle.
template <typename Container>
void shuffle(Container& c, Rng& rng) {
  const std::size_t n = c.size();
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
    using std::swap;
    swap(c[i - 1], c[j]);
  }
}

}  // namespace stj
