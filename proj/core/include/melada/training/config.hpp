#pragma once

#include <cstdint>

#include "melada/autodiff/adam.hpp"

namespace melada::train {

struct TrainConfig {
  double lr = 2e-4;
  double weight_decay = 1e-4;
  /// Weight of the controller loss in the network objective and of the meta
  /// loss in the controller objective.
  double lambda = 0.1;
  /// Step size of the differentiable inner update theta' = theta - alpha * dL_C/dtheta.
  double inner_alpha = 1e-3;
  std::uint32_t n_valid_domains = 3;
  /// Controller map g is frozen for iterations strictly greater than this.
  std::uint32_t freeze_threshold = 40;
  std::uint32_t max_iterations = 200;
  std::uint32_t batch_per_domain = 64;
  double pretrain_acc_gate = 0.85;
  std::uint32_t pretrain_max_iters = 2000;
  /// Training-set accuracy is checked at iteration 1 and then every this many iterations.
  std::uint32_t pretrain_eval_every = 10;
  /// Number of (theta, phi) updates per (omega, tau) update.
  std::uint32_t network_updates_per_iteration = 1;
  /// Record the inner gradient so the meta loss reaches omega (and the
  /// validation loss sees the inner step's Hessian). Off = first-order ablation.
  bool second_order = true;
  /// Dual gradient-reversal layers around g.
  bool adversarial = true;
  std::uint64_t seed = 42;

  void validate() const;
  ad::AdamHyper adam() const { return {lr, 0.9, 0.999, 1e-8, weight_decay}; }
};

}  // namespace melada::train
