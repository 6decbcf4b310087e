#pragma once

#include <cmath>
#include <cstdint>

namespace akpz {

// Counter-based pseudo randomness. Every consumer derives an independent
// substream from a 64-bit key, so a draw never depends on how many draws
// other consumers made. That is what makes event generation reproducible
// across window sizes and replay modes.

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (b * 0xff51afd7ed558ccdull));
}

struct SubStream {
  std::uint64_t state;

  explicit SubStream(std::uint64_t key) : state(mix64(key)) {}

  std::uint64_t next_u64() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1), 53 bits
  double next_u01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Poisson with mean 1 (Knuth's product method; exp(-1) threshold).
  int next_poisson1() {
    static const double kExpNeg1 = std::exp(-1.0);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= next_u01();
    } while (p > kExpNeg1);
    return k - 1;
  }
};

}  // namespace akpz
