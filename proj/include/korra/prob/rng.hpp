#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

namespace korra::prob {

namespace detail {

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// A named, seeded random stream. Each subsystem (content, timing, gates,
/// user simulation, forgetfulness) owns its own stream so that draws in one
/// never shift the sequence seen by another.
///
/// Every derived quantity (uniforms, normals, indices) is computed here from
/// raw mt19937_64 output rather than through <random> distributions, whose
/// algorithms are implementation-defined. Sequences are therefore identical
/// across standard libraries for the same (seed, label).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label)
      : seed_(seed),
        label_(label),
        engine_(detail::splitmix64(seed ^ detail::splitmix64(detail::fnv1a64(label_)))) {}

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next_u64() {
    ++draws_;
    return engine_();
  }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x >= threshold) return static_cast<std::size_t>(x % bound);
    }
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Box-Muller; consumes exactly two raw draws per call.
  double normal(double mean, double stddev) {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + stddev * z;
  }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

/// Stream labels used by the engine.
namespace streams {
inline constexpr std::string_view kContent = "content";
inline constexpr std::string_view kTiming = "timing";
inline constexpr std::string_view kGates = "gates";
inline constexpr std::string_view kUserLatency = "user-latency";
inline constexpr std::string_view kUserChoice = "user-choice";
inline constexpr std::string_view kForget = "forget";
}  // namespace streams

}  // namespace korra::prob
