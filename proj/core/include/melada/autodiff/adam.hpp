#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "melada/autodiff/tensor.hpp"

namespace melada::ad {

struct AdamHyper {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Coupled L2: `weight_decay * param` is added to the gradient before the
  /// moment updates.
  double weight_decay = 0.0;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;
};

/// One Adam update with bias correction, in place. A default-constructed
/// state is lazily sized to `params`.
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state,
               const AdamHyper& hyper);

}  // namespace melada::ad
