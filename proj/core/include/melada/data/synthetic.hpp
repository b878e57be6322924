#pragma once

#include <cstdint>
#include <vector>

#include "melada/data/domain.hpp"

namespace melada::data {

/// Parameters of the synthetic multi-subject benchmark.
struct SynthSpec {
  std::uint32_t n_domains = 8;
  std::uint32_t n_classes = 3;
  std::uint32_t feat_dim = 20;
  std::uint32_t seq_len = 15;
  std::uint32_t samples_per_class = 120;
  double shift_strength = 0.6;
  double noise_sigma = 0.3;
  /// Standard deviation of the class base means.
  double class_scale = 0.25;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Generates one Domain per subject (subject ids 1..n_domains).
///
/// Draw order, all from a single SplitMix64 stream seeded with `seed`:
///   1. class means m_c (c-major, feature-minor), each class_scale * N(0, 1);
///   2. per domain s: the perturbation matrix R_s (row-major, entries
///      N(0, 1/feat_dim)), then the offset b_s (entries N(0, 1)), then its
///      samples, interleaved by class (k = 0.., c = 0..n_classes-1), each
///      sample frame-major: u = m_c + noise_sigma * z, x = u + eps * (R_s u + b_s).
std::vector<Domain> gen_synthetic(const SynthSpec& spec);

}  // namespace melada::data
