#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace vprop {

/// Seeded random stream used everywhere randomness enters the library.
///
/// Uniform doubles use the top 53 bits of the engine output, so a stream
/// reproduces the same draws for the same seed regardless of how many
/// distribution objects exist elsewhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
  }

  double normal() {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent child seed from a master seed and a stream path,
/// e.g. derive_seed(seed, {kInitStream, role, agent}).
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  std::uint64_t state = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  for (std::uint64_t p : path) {
    std::seed_seq step{static_cast<std::uint32_t>(state), static_cast<std::uint32_t>(state >> 32),
                       static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(p >> 32)};
    step.generate(words, words + 2);
    state = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  }
  return state;
}

}  // namespace vprop
