#pragma once

#include <cmath>
#include <cstdint>

namespace ianpe {

// Deterministic, platform-independent RNG. std:: distributions are
// implementation-defined, so uniform/gaussian draws are spelled out here;
// traces must be byte-identical for a fixed seed on any standard-conforming
// build.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Counter-based keying: mixes (seed, stream, counter) into one 64-bit state.
inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t counter) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= stream * 0xD1342543DE82EF95ull + 0x2545F4914F6CDD1Dull;
  std::uint64_t b = splitmix64(s);
  s ^= counter * 0x9E3779B97F4A7C15ull + 0x123456789ABCDEFull;
  std::uint64_t c = splitmix64(s);
  return a ^ (b << 1) ^ (c >> 1);
}

// xoshiro256** seeded via splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t key) {
    std::uint64_t s = key;
    for (auto& w : s_) w = splitmix64(s);
  }
  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter)
      : Rng(mix_key(seed, stream, counter)) {}

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0,1) with 53-bit resolution
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // unbiased uniform integer in [0, n) (Lemire rejection)
  std::uint64_t next_below(std::uint64_t n) {
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t t = -n % n;
      while (lo < t) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // standard normal via Box-Muller (deterministic transcendental path)
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = next_unit();
    } while (u1 <= 0.0);
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ianpe
