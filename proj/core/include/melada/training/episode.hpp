#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "melada/data/domain.hpp"
#include "melada/data/rng.hpp"

namespace melada::train {

/// Meta-train / meta-validation split of the source domains (by position in
/// the source list). Both sides are sorted.
struct EpisodeSplit {
  std::vector<std::size_t> train_domains;
  std::vector<std::size_t> valid_domains;
};

/// Uniformly random disjoint split with `n_valid` validation domains.
/// Requires 1 <= n_valid < domain_ids.size().
EpisodeSplit partition_episode(std::span<const std::size_t> domain_ids, std::size_t n_valid,
                               data::SplitMix64& rng);

/// Draws sample indices of one domain without replacement; the permutation
/// is reshuffled once it cannot supply a full batch.
class DomainSampler {
 public:
  DomainSampler(std::size_t n_samples, std::uint64_t seed);
  std::vector<std::size_t> draw(std::size_t count);

 private:
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  data::SplitMix64 rng_;
};

/// Episode data: one batch per meta-train domain, and the meta-validation
/// domains stacked into one batch.
struct EpisodeBatches {
  std::vector<data::Batch> train;
  data::Batch valid;
};

class EpisodeSampler {
 public:
  EpisodeSampler(std::span<const data::Domain> domains, std::size_t batch_per_domain,
                 std::uint64_t seed);

  EpisodeBatches sample(const EpisodeSplit& split);
  /// One batch per domain, for every domain.
  std::vector<data::Batch> sample_all();

 private:
  std::span<const data::Domain> domains_;
  std::size_t batch_;
  std::vector<DomainSampler> samplers_;
};

}  // namespace melada::train
