#ifndef POPMINE_RNG_HPP
#define POPMINE_RNG_HPP

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace popmine {

// Seedable generator with portable output. std::mt19937_64 produces the same
// sequence on every conforming implementation; the std:: distributions do not,
// so all sampling goes through the helpers below.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Derives an independent stream seed from a base seed and a stream index
// (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n), unbiased via rejection.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Samples an index proportional to non-negative weights.
inline std::size_t sample_categorical(Rng& rng, std::span<const double> weights,
                                      double total) {
  double u = uniform_unit(rng) * total;
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    cum += weights[i];
    if (u < cum) return i;
  }
  return weights.size() - 1;
}

template <typename T>
void shuffle_in_place(Rng& rng, std::vector<T>& items) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = uniform_below(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace popmine

#endif  // POPMINE_RNG_HPP
