#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "melada/autodiff/tape.hpp"
#include "melada/model/params.hpp"

namespace melada::model {

/// Per-sample map g (the inner function psi of the sum-decomposition).
using InnerMap = std::function<ad::Var(ad::Var)>;

/// g(x) = tanh(x W1 + b1) W2 + b2, with `omega` = {W1, b1, W2, b2}.
InnerMap mlp_inner_map(std::span<const ad::Var> omega);
InnerMap identity_map();

struct ControllerOptions {
  /// Sandwich g between two gradient-reversal layers. Without them every
  /// parameter simply descends the loss.
  bool adversarial = true;
};

/// Domain-shift controller loss
///
///   L_C = sum_i || mean_{x in S_i} g(F(x)) - tau ||_2
///
/// Each domain batch goes GRL -> g -> GRL -> row mean -> minus tau -> norm,
/// so tau and the extractor receive descending gradients while g receives
/// ascending ones (max over g, min over tau).
ad::Var controller_loss(std::span<const ad::Var> domain_features, const InnerMap& g, ad::Var tau,
                        const ControllerOptions& options = {});

/// || mean g(a) - mean g(b) ||_2 for the current g: a lower bound of the
/// maximum mean norm discrepancy, which is a supremum over g.
ad::Var mmnd_estimate(ad::Var a, ad::Var b, const InnerMap& g);

/// Convenience overload on plain tensors; a null `omega` means g = identity.
double mmnd_estimate(const ad::Tensor& a, const ad::Tensor& b, const ParamGroup* omega);

/// For K domain means returns (sum_{i<j} |mu_i - mu_j|^2, K * sum_i |mu_i - mu_bar|^2),
/// which agree exactly in real arithmetic: aligning all pairs is aligning every
/// domain to the barycenter.
std::pair<double, double> barycenter_identity_check(std::span<const std::vector<double>> means);

}  // namespace melada::model
