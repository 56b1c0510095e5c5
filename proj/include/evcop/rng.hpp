#pragma once

// Deterministic random number generation.
//
// All randomness in the library flows through one root seed.  Independent
// streams (per replication, per column, per multiplier row) are derived
// with a splitmix64-based hash of (root, path...), so a parallel run and a
// serial run of the same experiment consume identical streams and agree
// bitwise.  The engine is std::mt19937_64, whose output sequence is fixed
// by the standard; doubles are built from the top 53 bits so every draw
// lies strictly inside (0,1).

#include <cstdint>
#include <initializer_list>
#include <random>

#include <boost/math/distributions/normal.hpp>

namespace evcop {

// Stream tags keep derived seeds for different purposes disjoint.
enum StreamTag : std::uint64_t {
  STREAM_SAMPLE = 0x01,
  STREAM_TEST = 0x02,
  STREAM_RANKS = 0x03,
  STREAM_MULTIPLIERS = 0x04,
  STREAM_GENERIC = 0x05,
};

namespace detail {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Hash (root, path...) into a fresh 64-bit seed.  Mixing each path element
// through splitmix64 keeps nearby roots and indices uncorrelated.
inline std::uint64_t derive_seed(std::uint64_t root,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = root;
  (void)detail::splitmix64_next(state);
  for (std::uint64_t p : path) {
    state ^= p + 0x9e3779b97f4a7c15ULL + (state << 6) + (state >> 2);
    (void)detail::splitmix64_next(state);
  }
  return detail::splitmix64_next(state);
}

// Engine wrapper with the draw primitives the library needs.  One
// uniform consumed per uniform/normal/exponential draw keeps streams easy
// to reason about: normals use the inverse cdf, not Box-Muller.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on (0,1); never returns an endpoint.
  double uniform() {
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    static const boost::math::normal_distribution<double> std_normal(0.0, 1.0);
    return boost::math::quantile(std_normal, uniform());
  }

  double exponential() { return -std::log(uniform()); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t bounded(std::uint64_t n) {
    const std::uint64_t reject_below = (-n) % n;
    for (;;) {
      const std::uint64_t x = engine_();
      if (x >= reject_below) return x % n;
    }
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace evcop
