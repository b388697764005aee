#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "abcrf/errors.hpp"

namespace abcrf {

// splitmix64 step, used both as a mixer for seed derivation and to expand a
// single seed into xoshiro state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a over a label string; labels keep substreams independent so that
// adding a consumer does not shift the draws of any other.
inline std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derive a stream seed from (base seed, label, up to two indices).
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = base;
  s ^= hash_label(label) + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
  std::uint64_t st = s;
  std::uint64_t m = splitmix64(st);
  st = m ^ (a * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  m = splitmix64(st);
  st = m ^ (b * 0xda942042e4dd58b5ULL + 0x9fb21c651e98df25ULL);
  return splitmix64(st);
}

// xoshiro256++ — small state, cheap construction, good statistical quality.
// We roll our own generator (and the samplers below) because the standard
// library distributions are implementation-defined, and every simulated
// table must be reproducible bit-for-bit from its seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe under log().
  double uniform01_open_low() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Unbiased integer in [0, bound) via Lemire's rejection scheme.
  std::uint64_t uniform_int(std::uint64_t bound) {
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Standard normal via Box-Muller. One value per call; the sibling draw is
  // discarded to keep the stream position independent of call history.
  double normal() {
    const double u1 = uniform01_open_low();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // Gamma(shape, scale 1) via Marsaglia-Tsang squeeze, shape >= 1.
  double gamma(double shape) {
    if (shape < 1.0) throw NumericError("gamma sampler requires shape >= 1");
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01_open_low();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Inverse gamma with shape kappa and scale lambda.
  double inverse_gamma(double kappa, double lambda) { return lambda / gamma(kappa); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

}  // namespace abcrf
