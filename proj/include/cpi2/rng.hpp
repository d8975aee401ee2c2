#pragma once

#include <cstdint>
#include <random>

namespace cpi2 {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic seed derivation for named substreams. Children derived from
/// the same (seed, a, b) triple are identical regardless of how the parent
/// generator has been used, which keeps parallel rollouts bit-reproducible.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Random stream with explicitly-coded uniform and normal draws so results do
/// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed), seed_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  /// Standard normal via Box-Muller; second half of each pair is cached.
  double normal();

  /// Independent child stream; does not consume parent state.
  Rng substream(std::uint64_t id) const { return Rng(mix_seed(seed_, id)); }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cpi2
