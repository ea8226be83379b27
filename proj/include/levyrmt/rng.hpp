#pragma once

#include <cstdint>
#include <random>

namespace levyrmt {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of stream `index` under a parent `seed`.
///
/// child_seed(s, i) = splitmix64(splitmix64(s) ^ splitmix64(i + 0x632be59bd9b4e019)).
/// Stable across releases: panels, shuffles and reference tables are keyed
/// on it, so changing the mix invalidates every frozen expectation.
constexpr std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// 64-bit Mersenne twister with distribution code written out here, so the
/// streams are identical across standard libraries (std:: distributions are
/// implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  /// Standard normal (Box-Muller, cached second variate).
  double normal();

  /// Gamma(shape, 1), Marsaglia-Tsang.
  double gamma(double shape);

  /// Chi-distributed with k degrees of freedom.
  double chi(double k);

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace levyrmt
