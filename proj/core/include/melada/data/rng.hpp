#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>

namespace melada::data {

/// SplitMix64 generator with Box-Muller normals.
///
/// The algorithm is pinned (rather than using <random> distributions, whose
/// output is implementation-defined) so that synthetic datasets are
/// byte-identical across standard libraries and languages.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in the open interval (0, 1): the top 53 bits, offset by half an ulp.
  double uniform() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal. Box-Muller yields pairs; the sine branch is cached and
  /// returned by the following call.
  double normal() noexcept;

  /// Unbiased integer in [0, n) by rejection. n must be > 0.
  std::size_t below(std::size_t n) noexcept;

  /// Fisher-Yates, iterating from the back.
  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
  std::optional<double> cached_normal_;
};

/// Seed for an independent stream derived from a master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace melada::data
