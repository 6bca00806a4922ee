#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace dwsnn {

// splitmix64 finalizer; full-period 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-derived random stream. Streams for distinct (seed, path) pairs are
// statistically independent, which makes parallel simulation results
// independent of thread count and batch partitioning: every work item derives
// its own stream from its logical index instead of sharing a sequential
// generator.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(mix64(seed)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Standard normal via Box-Muller. Uses both uniforms per call and keeps no
  // cached state so the draw sequence is position-independent.
  double next_normal() {
    const double u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(6.283185307179586476925287 * u2);
  }

  // Uniform integer in [0, n); rejection sampling, no modulo bias.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

 private:
  std::uint64_t state_;
};

// Derives a child stream from a seed and a logical path of indices,
// e.g. derive_stream(seed, {kEncode, epoch, sample, pixel}).
inline RngStream derive_stream(std::uint64_t seed,
                               std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(seed);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p));
  return RngStream(s);
}

// Stream-purpose tags; fixed values keep records reproducible across builds.
namespace stream_tag {
inline constexpr std::uint64_t kInit = 0x01;
inline constexpr std::uint64_t kShuffle = 0x02;
inline constexpr std::uint64_t kEncode = 0x03;
inline constexpr std::uint64_t kNeuron = 0x04;
inline constexpr std::uint64_t kEval = 0x05;
inline constexpr std::uint64_t kNoise = 0x06;
inline constexpr std::uint64_t kSplit = 0x07;
inline constexpr std::uint64_t kCycle = 0x08;
}  // namespace stream_tag

}  // namespace dwsnn
