#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ghostkit {

// xoshiro256** seeded through splitmix64. Every randomized routine takes a
// (seed, stream) pair so that independent draws never share a state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  // Poisson(mean): multiplicative inversion below 10, PTRS rejection above.
  std::int64_t poisson(double mean);
  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::int64_t poisson_inversion(double mean);
  std::int64_t poisson_ptrs(double mean);

  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Stream identifiers used across the toolkit; kept in one place so that
// streams are never accidentally reused for different purposes.
namespace streams {
inline constexpr std::uint64_t kMasks = 1;
inline constexpr std::uint64_t kPoisson = 2;
inline constexpr std::uint64_t kPhantom = 3;
inline constexpr std::uint64_t kPencilBeam = 4;
inline constexpr std::uint64_t kSplits = 5;
inline constexpr std::uint64_t kCrossValidation = 6;
inline constexpr std::uint64_t kModelInit = 7;
inline constexpr std::uint64_t kFourierFeatures = 8;
inline constexpr std::uint64_t kPowerIteration = 9;
inline constexpr std::uint64_t kLossProbe = 10;
}  // namespace streams

}  // namespace ghostkit
