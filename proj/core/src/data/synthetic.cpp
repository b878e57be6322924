#include "melada/data/synthetic.hpp"

#include <cmath>

#include <fmt/format.h>

#include "melada/data/rng.hpp"
#include "melada/error.hpp"

namespace melada::data {

void SynthSpec::validate() const {
  if (n_domains < 1 || n_classes < 1 || feat_dim < 1 || seq_len < 1 || samples_per_class < 1) {
    throw InvalidArgument("synthetic spec: all counts must be >= 1");
  }
  if (n_classes > 255) throw InvalidArgument("synthetic spec: at most 255 classes");
  if (!(shift_strength >= 0.0) || !std::isfinite(shift_strength)) {
    throw InvalidArgument(fmt::format("synthetic spec: shift_strength must be >= 0, got {}",
                                      shift_strength));
  }
  if (!(class_scale > 0.0) || !std::isfinite(class_scale)) {
    throw InvalidArgument(fmt::format("synthetic spec: class_scale must be > 0, got {}",
                                      class_scale));
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw InvalidArgument(fmt::format("synthetic spec: noise_sigma must be >= 0, got {}",
                                      noise_sigma));
  }
}

std::vector<Domain> gen_synthetic(const SynthSpec& spec) {
  spec.validate();
  SplitMix64 rng(spec.seed);
  const std::size_t dim = spec.feat_dim;
  const double eps = spec.shift_strength;

  std::vector<std::vector<double>> class_means(spec.n_classes, std::vector<double>(dim));
  for (auto& m : class_means) {
    for (auto& v : m) v = spec.class_scale * rng.normal();
  }

  const double r_scale = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<Domain> domains;
  domains.reserve(spec.n_domains);
  std::vector<double> rot(dim * dim);
  std::vector<double> offset(dim);
  std::vector<double> u(dim);
  std::vector<double> sample(spec.seq_len * dim);

  for (std::uint32_t s = 0; s < spec.n_domains; ++s) {
    for (auto& v : rot) v = rng.normal() * r_scale;
    for (auto& v : offset) v = rng.normal();

    Domain d;
    d.subject_id = s + 1;
    d.n_classes = spec.n_classes;
    d.seq_len = spec.seq_len;
    d.feat_dim = spec.feat_dim;
    d.provenance = Provenance::Synthetic;
    d.labels.reserve(static_cast<std::size_t>(spec.samples_per_class) * spec.n_classes);
    d.frames.reserve(d.labels.capacity() * sample.size());

    for (std::uint32_t k = 0; k < spec.samples_per_class; ++k) {
      for (std::uint32_t c = 0; c < spec.n_classes; ++c) {
        const auto& mean = class_means[c];
        for (std::size_t t = 0; t < spec.seq_len; ++t) {
          for (std::size_t j = 0; j < dim; ++j) u[j] = mean[j] + spec.noise_sigma * rng.normal();
          double* x = sample.data() + t * dim;
          for (std::size_t i = 0; i < dim; ++i) {
            double ru = 0.0;
            for (std::size_t j = 0; j < dim; ++j) ru += rot[i * dim + j] * u[j];
            x[i] = u[i] + eps * (ru + offset[i]);
          }
        }
        d.push_back(sample, static_cast<std::uint8_t>(c));
      }
    }
    domains.push_back(std::move(d));
  }
  return domains;
}

}  // namespace melada::data
