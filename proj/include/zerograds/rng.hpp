#pragma once

#include <cstdint>

#include "zerograds/core.hpp"

namespace zg {

/// Counter-based generator. Output k of a stream with key K is
///
///   mix64(K + (k + 1) * 0x9E3779B97F4A7C15)
///
/// where mix64 is the SplitMix64 finalizer
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   z =  z ^ (z >> 31)
///
/// The key of a fresh generator is mix64(seed). split(i) derives a child key
/// mix64(K ^ mix64(i + 0x632BE59BD9B4E5F5)) and a zero counter, so children
/// are independent of how many draws the parent has made.
///
/// Normals use the Box-Muller transform on two uniforms (u1 in (0,1],
/// u2 in [0,1)), producing two normals per pair. Filling an n-vector with
/// normals always consumes exactly 2*ceil(n/2) raw outputs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : key_(mix64(seed)) {}

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Multiply-shift, one raw output.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Two independent standard normals from two raw outputs.
  std::pair<double, double> normal_pair();

  /// One standard normal; discards the second Box-Muller output so the
  /// consumption stays at two raw outputs per call.
  double normal() { return normal_pair().first; }

  /// Fills `out` with standard normals (2*ceil(n/2) raw outputs).
  void fill_normal(Vector& out);

  /// +1 or -1 with equal probability, one raw output.
  double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

  Rng split(std::uint64_t stream) const {
    Rng child;
    child.key_ = mix64(key_ ^ mix64(stream + 0x632BE59BD9B4E5F5ULL));
    child.counter_ = 0;
    return child;
  }

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace zg
