#include "melada/model/controller.hpp"

#include <fmt/format.h>

#include "melada/error.hpp"

namespace melada::model {

InnerMap mlp_inner_map(std::span<const ad::Var> omega) {
  if (omega.size() != 4) {
    throw ShapeError(fmt::format("controller map expects 4 tensors, got {}", omega.size()));
  }
  std::array<ad::Var, 4> w{omega[0], omega[1], omega[2], omega[3]};
  return [w](ad::Var x) {
    const ad::Var hidden = ad::tanh(ad::add_row(ad::matmul(x, w[0]), w[1]));
    return ad::add_row(ad::matmul(hidden, w[2]), w[3]);
  };
}

InnerMap identity_map() {
  return [](ad::Var x) { return x; };
}

ad::Var controller_loss(std::span<const ad::Var> domain_features, const InnerMap& g, ad::Var tau,
                        const ControllerOptions& options) {
  if (domain_features.empty()) throw InvalidArgument("controller_loss: no domains");
  std::optional<ad::Var> total;
  for (std::size_t i = 0; i < domain_features.size(); ++i) {
    const ad::Var feats = domain_features[i];
    if (feats.value().rows() == 0) {
      throw InvalidArgument(fmt::format("controller_loss: domain batch {} is empty", i));
    }
    ad::Var mapped = g(options.adversarial ? ad::grl(feats) : feats);
    if (options.adversarial) mapped = ad::grl(mapped);
    const ad::Var gap = ad::sub(ad::mean_rows(mapped), tau);
    const ad::Var dist = ad::l2_norm(gap);
    total = total ? ad::add(*total, dist) : dist;
  }
  return *total;
}

ad::Var mmnd_estimate(ad::Var a, ad::Var b, const InnerMap& g) {
  if (a.value().rows() == 0 || b.value().rows() == 0) {
    throw InvalidArgument("mmnd_estimate: both sets must be non-empty");
  }
  return ad::l2_norm(ad::sub(ad::mean_rows(g(a)), ad::mean_rows(g(b))));
}

double mmnd_estimate(const ad::Tensor& a, const ad::Tensor& b, const ParamGroup* omega) {
  ad::Tape tape;
  const auto map = omega ? mlp_inner_map(bind(tape, *omega, false)) : identity_map();
  return mmnd_estimate(tape.constant(a), tape.constant(b), map).value().item();
}

std::pair<double, double> barycenter_identity_check(std::span<const std::vector<double>> means) {
  if (means.size() < 2) throw InvalidArgument("barycenter_identity_check: need at least 2 means");
  const std::size_t dim = means.front().size();
  for (const auto& m : means) {
    if (m.size() != dim) throw ShapeError("barycenter_identity_check: means differ in dimension");
  }
  const std::size_t k = means.size();

  double pairwise = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = means[i][d] - means[j][d];
        pairwise += diff * diff;
      }
    }
  }

  std::vector<double> center(dim, 0.0);
  for (const auto& m : means) {
    for (std::size_t d = 0; d < dim; ++d) center[d] += m[d];
  }
  for (double& c : center) c /= static_cast<double>(k);
  double spread = 0.0;
  for (const auto& m : means) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = m[d] - center[d];
      spread += diff * diff;
    }
  }
  return {pairwise, static_cast<double>(k) * spread};
}

}  // namespace melada::model
