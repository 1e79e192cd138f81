#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pitsim {

/// SplitMix64 finaliser. Used to derive independent seeds from (seed, index).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded generator with bit-exact, platform-independent variates.
///
/// The engine is std::mt19937_64 (its output sequence is fixed by the
/// standard). Variates are derived from raw 64-bit outputs by explicit
/// formulas rather than std::*_distribution, whose algorithms differ
/// between standard libraries.
///
/// Replicate streams: `Rng::stream(seed, index)` seeds the engine with
/// splitmix64(splitmix64(seed) ^ splitmix64(index + 1)). The derivation is
/// counter based, so replicate k gets the same stream no matter which thread
/// or in which order it runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 1)));
  }

  /// Child stream for a sub-task; does not advance this generator.
  Rng split(std::uint64_t index) const { return stream(base_seed_hint(), index); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0,1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Exponential with the given rate (mean 1/rate).
  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n), unbiased by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::uint64_t base_seed_hint() const {
    // Peek at the next output without advancing.
    auto copy = engine_;
    return copy();
  }

  std::mt19937_64 engine_;
};

}  // namespace pitsim
