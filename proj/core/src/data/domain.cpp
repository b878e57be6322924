#include "melada/data/domain.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "melada/error.hpp"

namespace melada::data {

void Domain::push_back(std::span<const double> sample_frames, std::uint8_t label) {
  if (sample_frames.size() != sample_stride()) {
    throw InvalidArgument(fmt::format("subject {}: sample has {} values, expected {}x{}",
                                      subject_id, sample_frames.size(), seq_len, feat_dim));
  }
  frames.insert(frames.end(), sample_frames.begin(), sample_frames.end());
  labels.push_back(label);
}

void Domain::validate() const {
  if (seq_len == 0 || feat_dim == 0 || n_classes == 0) {
    throw InvalidArgument(fmt::format("subject {}: seq_len, feat_dim and n_classes must be >= 1",
                                      subject_id));
  }
  if (frames.size() != labels.size() * sample_stride()) {
    throw InvalidArgument(fmt::format("subject {}: {} frame values for {} samples of {}x{}",
                                      subject_id, frames.size(), labels.size(), seq_len, feat_dim));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n_classes) {
      throw InvalidArgument(fmt::format("subject {}: sample {} has label {} but n_classes is {}",
                                        subject_id, i, labels[i], n_classes));
    }
  }
  if (!std::all_of(frames.begin(), frames.end(), [](double v) { return std::isfinite(v); })) {
    throw InvalidArgument(fmt::format("subject {}: non-finite feature value", subject_id));
  }
}

bool Domain::same_content(const Domain& other) const noexcept {
  return subject_id == other.subject_id && n_classes == other.n_classes &&
         seq_len == other.seq_len && feat_dim == other.feat_dim && labels == other.labels &&
         frames == other.frames;
}

void validate_dataset(std::span<const Domain> domains) {
  std::set<std::uint32_t> seen;
  for (const auto& d : domains) {
    d.validate();
    if (!seen.insert(d.subject_id).second) {
      throw InvalidArgument(fmt::format("duplicate subject id {}", d.subject_id));
    }
    const auto& first = domains.front();
    if (d.seq_len != first.seq_len || d.feat_dim != first.feat_dim ||
        d.n_classes != first.n_classes) {
      throw InvalidArgument(fmt::format(
          "subject {} has dims {}x{} with {} classes; subject {} has {}x{} with {}", d.subject_id,
          d.seq_len, d.feat_dim, d.n_classes, first.subject_id, first.seq_len, first.feat_dim,
          first.n_classes));
    }
  }
}

Batch make_batch(const Domain& domain, std::span<const std::size_t> indices) {
  Batch b;
  b.steps = domain.seq_len;
  b.features = domain.feat_dim;
  b.data.reserve(indices.size() * domain.sample_stride());
  b.labels.reserve(indices.size());
  for (auto i : indices) {
    if (i >= domain.size()) {
      throw InvalidArgument(fmt::format("subject {}: sample index {} out of range ({})",
                                        domain.subject_id, i, domain.size()));
    }
    auto s = domain.sample(i);
    b.data.insert(b.data.end(), s.begin(), s.end());
    b.labels.push_back(domain.labels[i]);
  }
  return b;
}

Batch whole_domain(const Domain& domain) {
  Batch b;
  b.steps = domain.seq_len;
  b.features = domain.feat_dim;
  b.data = domain.frames;
  b.labels = domain.labels;
  return b;
}

Batch concat_batches(std::span<const Batch> batches) {
  Batch out;
  if (batches.empty()) return out;
  out.steps = batches.front().steps;
  out.features = batches.front().features;
  for (const auto& b : batches) {
    if (b.steps != out.steps || b.features != out.features) {
      throw ShapeError(fmt::format("cannot stack batches of {}x{} and {}x{}", out.steps,
                                   out.features, b.steps, b.features));
    }
    out.data.insert(out.data.end(), b.data.begin(), b.data.end());
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  }
  return out;
}

}  // namespace melada::data
