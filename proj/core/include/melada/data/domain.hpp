#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace melada::data {

enum class Provenance : std::uint8_t { Synthetic, Imported };

/// One windowed feature sequence (seq_len x feat_dim, row-major) with its class.
struct SequenceSample {
  std::vector<double> frames;
  std::uint8_t label = 0;
};

/// One subject's labelled sequences. Samples are stored contiguously:
/// sample i occupies frames[i * seq_len * feat_dim, (i + 1) * seq_len * feat_dim).
struct Domain {
  std::uint32_t subject_id = 0;
  std::uint32_t n_classes = 3;
  std::uint32_t seq_len = 15;
  std::uint32_t feat_dim = 310;
  std::vector<std::uint8_t> labels;
  std::vector<double> frames;
  Provenance provenance = Provenance::Imported;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t sample_stride() const noexcept {
    return static_cast<std::size_t>(seq_len) * feat_dim;
  }
  std::span<const double> sample(std::size_t i) const {
    return std::span<const double>(frames).subspan(i * sample_stride(), sample_stride());
  }
  void push_back(std::span<const double> sample_frames, std::uint8_t label);

  /// Throws InvalidArgument if sizes or labels are inconsistent.
  void validate() const;

  /// Logical equality; provenance is bookkeeping and not compared.
  bool same_content(const Domain& other) const noexcept;
};

/// Throws unless every domain shares seq_len, feat_dim and n_classes, and
/// subject ids are unique.
void validate_dataset(std::span<const Domain> domains);

/// A stack of sequences ready for the networks: data is size x steps x features.
struct Batch {
  std::size_t steps = 0;
  std::size_t features = 0;
  std::vector<double> data;
  std::vector<std::uint8_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

Batch make_batch(const Domain& domain, std::span<const std::size_t> indices);
Batch whole_domain(const Domain& domain);
Batch concat_batches(std::span<const Batch> batches);

}  // namespace melada::data
