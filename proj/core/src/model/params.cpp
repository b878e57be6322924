#include "melada/model/params.hpp"

#include <cmath>

#include <fmt/format.h>

#include "melada/data/rng.hpp"
#include "melada/error.hpp"
#include "melada/util/binary.hpp"

namespace melada::model {

namespace {

ad::Tensor uniform(data::SplitMix64& rng, std::size_t rows, std::size_t cols, double k) {
  ad::Tensor t = ad::Tensor::zeros({rows, cols});
  for (double& v : t.data()) v = rng.uniform(-k, k);
  return t;
}

}  // namespace

void ModelDims::validate() const {
  if (input_dim == 0 || seq_len == 0 || hidden == 0 || layers == 0 || mlp_hidden == 0 ||
      classes == 0 || ctrl_hidden == 0 || ctrl_out == 0) {
    throw InvalidArgument("model dimensions must all be >= 1");
  }
}

std::size_t ParamGroup::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

const ad::Tensor& ParamGroup::at(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return tensors[i];
  }
  throw InvalidArgument(fmt::format("no parameter named {}", name));
}

void ParamGroup::add(std::string name, ad::Tensor value) {
  names.push_back(std::move(name));
  tensors.push_back(std::move(value));
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  data::SplitMix64 rng(seed);
  ModelParams p;
  p.dims = dims;

  const std::size_t h = dims.hidden;
  const double k_lstm = 1.0 / std::sqrt(static_cast<double>(h));
  for (std::uint32_t l = 0; l < dims.layers; ++l) {
    const std::size_t in = l == 0 ? dims.input_dim : h;
    p.extractor.add(fmt::format("lstm{}.weight", l), uniform(rng, in + h, 4 * h, k_lstm));
    auto bias = uniform(rng, 1, 4 * h, k_lstm);
    for (std::size_t j = h; j < 2 * h; ++j) bias(0, j) = 1.0;  // forget gate
    p.extractor.add(fmt::format("lstm{}.bias", l), std::move(bias));
  }

  auto dense = [&](ParamGroup& g, const std::string& prefix, std::size_t in, std::size_t out) {
    const double k = 1.0 / std::sqrt(static_cast<double>(in));
    g.add(prefix + ".weight", uniform(rng, in, out, k));
    g.add(prefix + ".bias", uniform(rng, 1, out, k));
  };
  dense(p.classifier, "classifier.fc1", h, dims.mlp_hidden);
  dense(p.classifier, "classifier.fc2", dims.mlp_hidden, dims.classes);
  dense(p.controller, "controller.fc1", h, dims.ctrl_hidden);
  dense(p.controller, "controller.fc2", dims.ctrl_hidden, dims.ctrl_out);
  p.anchor.add("anchor.tau", ad::Tensor::zeros({1, dims.ctrl_out}));
  return p;
}

std::vector<ad::Var> bind(ad::Tape& tape, const ParamGroup& group, bool trainable) {
  std::vector<ad::Var> vars;
  vars.reserve(group.size());
  for (const auto& t : group.tensors) vars.push_back(trainable ? tape.leaf(t) : tape.constant(t));
  return vars;
}

void assign(ParamGroup& group, std::span<const ad::Var> vars) {
  if (vars.size() != group.size()) {
    throw ShapeError(fmt::format("assign: {} values for a group of {}", vars.size(), group.size()));
  }
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (!vars[i].value().same_shape(group.tensors[i])) {
      throw ShapeError(fmt::format("assign: shape mismatch for {}", group.names[i]));
    }
    group.tensors[i] = vars[i].value();
  }
}

std::vector<std::uint8_t> serialize_group(const ParamGroup& group) {
  util::ByteWriter w;
  for (const auto& t : group.tensors) {
    for (double v : t.data()) w.f64(v);
  }
  return w.take();
}

std::string group_hash(const ParamGroup& group) { return util::sha256_hex(serialize_group(group)); }

}  // namespace melada::model
