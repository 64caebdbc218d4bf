#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace starswipt {

// Seed derivation. One root seed fans out into independent child streams,
// one per (purpose, indices...) tuple:
//
//   child = splitmix64( ... splitmix64( splitmix64(root ^ fnv1a(purpose)) ^ i0 ) ^ i1 ... )
//
// splitmix64 is the finalizer of Steele et al.'s SplitMix generator and
// fnv1a is the 64-bit FNV-1a string hash. The same tuple always yields the
// same child seed, and distinct tuples yield (for all practical purposes)
// uncorrelated streams, so sweep workers can draw in parallel without
// sharing state.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose) {
  return splitmix64(root ^ fnv1a64(purpose));
}

template <typename... Ix>
std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose, Ix... indices) {
  std::uint64_t h = derive_seed(root, purpose);
  ((h = splitmix64(h ^ static_cast<std::uint64_t>(indices))), ...);
  return h;
}

// Deterministic random stream. Gaussians come from Box-Muller on raw
// mt19937_64 output rather than std::normal_distribution, whose sequence
// is implementation-defined; this keeps channel realizations identical
// across standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  // Uniform phase on (0, 2*pi].
  double phase() { return 2.0 * kPi * uniform_pos(); }

  // Standard real normal (one Box-Muller pair per call, cosine branch).
  double normal() {
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    return r * std::cos(2.0 * kPi * uniform());
  }

  // Circularly symmetric complex normal with unit variance, E|z|^2 = 1.
  std::complex<double> cnormal() {
    const double r = std::sqrt(-std::log(uniform_pos()));
    const double a = 2.0 * kPi * uniform();
    return {r * std::cos(a), r * std::sin(a)};
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 eng_;
};

}  // namespace starswipt
