#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace nudgekit {

/// Counter-based generator: draw i of stream s under seed k is a pure function
/// of (k, s, i), so ensemble member s can be regenerated without replaying any
/// other member. Mixing uses the SplitMix64 finalizer. Satisfies
/// UniformRandomBitGenerator, but uniform() and normal() are preferred because
/// their output does not depend on the standard library implementation.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return at(counter_++); }

  /// The value at an absolute counter position; does not advance.
  result_type at(std::uint64_t counter) const {
    std::uint64_t z = mix(seed_ ^ mix(stream_ + 0x9e3779b97f4a7c15ull));
    z = mix(z + counter * 0xd1342543de82ef95ull + 0x632be59bd9b4e019ull);
    return z;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (one draw per call, two uniforms consumed).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const { return counter_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace nudgekit
