#include "melada/training/episode.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "melada/error.hpp"
#include "melada/training/config.hpp"

namespace melada::train {

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !(weight_decay >= 0.0) || !(lambda >= 0.0) || !(inner_alpha >= 0.0)) {
    throw InvalidArgument("train config: lr must be > 0; weight_decay, lambda, inner_alpha >= 0");
  }
  if (n_valid_domains < 1) throw InvalidArgument("train config: n_valid_domains must be >= 1");
  if (freeze_threshold > max_iterations) {
    throw InvalidArgument(fmt::format("train config: freeze_threshold {} exceeds max_iterations {}",
                                      freeze_threshold, max_iterations));
  }
  if (batch_per_domain < 1 || pretrain_eval_every < 1 || network_updates_per_iteration < 1) {
    throw InvalidArgument("train config: batch sizes and schedule counts must be >= 1");
  }
  if (!(pretrain_acc_gate >= 0.0 && pretrain_acc_gate <= 1.0)) {
    throw InvalidArgument("train config: pretrain_acc_gate must lie in [0, 1]");
  }
}

EpisodeSplit partition_episode(std::span<const std::size_t> domain_ids, std::size_t n_valid,
                               data::SplitMix64& rng) {
  if (n_valid < 1 || n_valid >= domain_ids.size()) {
    throw InvalidArgument(fmt::format(
        "partition_episode: n_valid must be in [1, {}), got {}", domain_ids.size(), n_valid));
  }
  std::vector<std::size_t> ids(domain_ids.begin(), domain_ids.end());
  rng.shuffle(std::span(ids));
  EpisodeSplit split;
  split.valid_domains.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_valid));
  split.train_domains.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_valid), ids.end());
  std::sort(split.valid_domains.begin(), split.valid_domains.end());
  std::sort(split.train_domains.begin(), split.train_domains.end());
  return split;
}

DomainSampler::DomainSampler(std::size_t n_samples, std::uint64_t seed)
    : order_(n_samples), pos_(n_samples), rng_(seed) {
  if (n_samples == 0) throw InvalidArgument("DomainSampler: domain has no samples");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
}

std::vector<std::size_t> DomainSampler::draw(std::size_t count) {
  count = std::min(count, order_.size());
  if (pos_ + count > order_.size()) {
    rng_.shuffle(std::span(order_));
    pos_ = 0;
  }
  std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                               order_.begin() + static_cast<std::ptrdiff_t>(pos_ + count));
  pos_ += count;
  return out;
}

EpisodeSampler::EpisodeSampler(std::span<const data::Domain> domains, std::size_t batch_per_domain,
                               std::uint64_t seed)
    : domains_(domains), batch_(batch_per_domain) {
  samplers_.reserve(domains.size());
  for (std::size_t i = 0; i < domains.size(); ++i) {
    samplers_.emplace_back(domains[i].size(), data::derive_seed(seed, i));
  }
}

EpisodeBatches EpisodeSampler::sample(const EpisodeSplit& split) {
  EpisodeBatches out;
  for (auto d : split.train_domains) {
    out.train.push_back(data::make_batch(domains_[d], samplers_[d].draw(batch_)));
  }
  std::vector<data::Batch> valid;
  for (auto d : split.valid_domains) {
    valid.push_back(data::make_batch(domains_[d], samplers_[d].draw(batch_)));
  }
  out.valid = data::concat_batches(valid);
  return out;
}

std::vector<data::Batch> EpisodeSampler::sample_all() {
  std::vector<data::Batch> out;
  out.reserve(domains_.size());
  for (std::size_t d = 0; d < domains_.size(); ++d) {
    out.push_back(data::make_batch(domains_[d], samplers_[d].draw(batch_)));
  }
  return out;
}

}  // namespace melada::train
