#include "melada/autodiff/adam.hpp"

#include <cmath>

#include <fmt/format.h>

#include "melada/error.hpp"

namespace melada::ad {

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state,
               const AdamHyper& hyper) {
  if (!(hyper.lr > 0.0)) throw InvalidArgument(fmt::format("adam: lr must be > 0, got {}", hyper.lr));
  if (params.size() != grads.size()) {
    throw ShapeError(fmt::format("adam: {} parameters but {} gradients", params.size(), grads.size()));
  }
  if (state.m.empty() && state.v.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Tensor::zeros(p.shape()));
      state.v.push_back(Tensor::zeros(p.shape()));
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam: optimizer state does not match parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].same_shape(grads[i]) || !params[i].same_shape(state.m[i])) {
      throw ShapeError(fmt::format("adam: parameter {} has shape {} but gradient {}", i,
                                   shape_string(params[i].shape()), shape_string(grads[i].shape())));
    }
  }

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k] + hyper.weight_decay * p[k];
      m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * gk;
      v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * gk * gk;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
  }
}

}  // namespace melada::ad
