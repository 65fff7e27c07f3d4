#pragma once

#include "satrack/types.hpp"

#include <cstdint>
#include <initializer_list>

namespace satrack {

// Stateless splitmix64 finalizer, used for seeding and stream-id hashing.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t combine_hash(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2)));
}

/// Fold any number of identifiers into one stream id (order-sensitive).
constexpr std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (auto p : parts) h = combine_hash(h, p);
  return h;
}

/// Deterministic random source: identical (seed, stream) pairs yield
/// bit-identical sequences; distinct streams are statistically independent.
/// xoshiro256++ core seeded through splitmix64. Single-owner by contract:
/// pass explicitly, never share between tasks.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t sm = combine_hash(combine_hash(0xA0761D6478BD642FULL, seed), stream);
    for (auto& w : s_) {
      sm += 0x9E3779B97F4A7C15ULL;
      w = mix64(sm);
    }
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (two uniforms per draw, no cached spare).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  Vec3 normal3() {
    Vec3 v;
    v << normal(), normal(), normal();
    return v;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

/// Deterministic random source for (seed, stream_id).
inline RngStream rng_stream(std::uint64_t seed, std::uint64_t stream) {
  return RngStream(seed, stream);
}

}  // namespace satrack
