#include "melada/model/networks.hpp"

#include <fmt/format.h>

#include "melada/error.hpp"

namespace melada::model {

namespace {

ad::Tensor step_input(const data::Batch& batch, std::size_t t) {
  const std::size_t b = batch.size();
  ad::Tensor x = ad::Tensor::zeros({b, batch.features});
  const std::size_t stride = batch.steps * batch.features;
  auto out = x.data();
  for (std::size_t i = 0; i < b; ++i) {
    const double* src = batch.data.data() + i * stride + t * batch.features;
    std::copy(src, src + batch.features, out.begin() + static_cast<std::ptrdiff_t>(i * batch.features));
  }
  return x;
}

}  // namespace

ad::Var extract(ad::Tape& tape, const data::Batch& batch, std::span<const ad::Var> theta) {
  if (theta.empty() || theta.size() % 2 != 0) {
    throw ShapeError(fmt::format("extract: expected weight/bias pairs, got {} tensors", theta.size()));
  }
  if (batch.data.size() != batch.size() * batch.steps * batch.features) {
    throw ShapeError("extract: batch data does not match its declared dimensions");
  }
  const std::size_t layers = theta.size() / 2;
  const std::size_t hidden = theta[1].value().cols() / 4;
  const std::size_t b = batch.size();

  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = theta[2 * l].value();
    const auto& bias = theta[2 * l + 1].value();
    const std::size_t in = l == 0 ? batch.features : hidden;
    if (w.rows() != in + hidden || w.cols() != 4 * hidden || bias.rows() != 1 ||
        bias.cols() != 4 * hidden) {
      throw ShapeError(fmt::format(
          "extract: layer {} expects weight {}x{} and bias 1x{}, got {} and {}", l, in + hidden,
          4 * hidden, 4 * hidden, ad::shape_string(w.shape()), ad::shape_string(bias.shape())));
    }
  }
  if (batch.steps == 0) throw ShapeError("extract: sequences have no time steps");

  std::vector<ad::Var> inputs;
  inputs.reserve(batch.steps);
  for (std::size_t t = 0; t < batch.steps; ++t) inputs.push_back(tape.constant(step_input(batch, t)));

  for (std::size_t l = 0; l < layers; ++l) {
    const ad::Var w = theta[2 * l];
    const ad::Var bias = theta[2 * l + 1];
    ad::Var h = tape.constant(ad::Tensor::zeros({b, hidden}));
    ad::Var c = tape.constant(ad::Tensor::zeros({b, hidden}));
    for (std::size_t t = 0; t < batch.steps; ++t) {
      const ad::Var z = ad::add_row(ad::matmul(ad::concat_cols(inputs[t], h), w), bias);
      const ad::Var in_gate = ad::sigmoid(ad::slice_cols(z, 0, hidden));
      const ad::Var forget = ad::sigmoid(ad::slice_cols(z, hidden, hidden));
      const ad::Var cand = ad::tanh(ad::slice_cols(z, 2 * hidden, hidden));
      const ad::Var out_gate = ad::sigmoid(ad::slice_cols(z, 3 * hidden, hidden));
      c = forget * c + in_gate * cand;
      h = out_gate * ad::tanh(c);
      inputs[t] = h;
    }
  }
  return inputs.back();
}

ad::Var classify(ad::Var features, std::span<const ad::Var> phi) {
  if (phi.size() != 4) throw ShapeError(fmt::format("classify: expected 4 tensors, got {}", phi.size()));
  const ad::Var hidden = ad::tanh(ad::add_row(ad::matmul(features, phi[0]), phi[1]));
  return ad::add_row(ad::matmul(hidden, phi[2]), phi[3]);
}

ad::Var cross_entropy_per_sample(ad::Var logits, std::span<const std::uint8_t> labels) {
  const auto& z = logits.value();
  if (z.rows() != labels.size()) {
    throw ShapeError(fmt::format("cross_entropy: {} logit rows for {} labels", z.rows(), labels.size()));
  }
  ad::Tensor onehot = ad::Tensor::zeros({z.rows(), z.cols()});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= z.cols()) {
      throw InvalidArgument(fmt::format("cross_entropy: label {} out of range for {} classes",
                                        labels[i], z.cols()));
    }
    onehot(i, labels[i]) = 1.0;
  }
  const ad::Var mask = logits.tape().constant(std::move(onehot));
  return ad::neg(ad::sum_cols(ad::log_softmax(logits) * mask));
}

ad::Var cross_entropy(ad::Var logits, std::span<const std::uint8_t> labels) {
  if (labels.empty()) throw InvalidArgument("cross_entropy: empty batch");
  return ad::mean_all(cross_entropy_per_sample(logits, labels));
}

std::vector<std::uint8_t> argmax_rows(const ad::Tensor& logits) {
  std::vector<std::uint8_t> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.cols(); ++j) {
      if (logits(i, j) > logits(i, best)) best = j;
    }
    out[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

double accuracy(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> labels) {
  if (predicted.size() != labels.size()) throw ShapeError("accuracy: size mismatch");
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

ad::Tensor features(const ModelParams& params, const data::Batch& batch) {
  ad::Tape tape;
  const auto theta = bind(tape, params.extractor, false);
  return extract(tape, batch, theta).value();
}

ad::Tensor logits(const ModelParams& params, const data::Batch& batch) {
  ad::Tape tape;
  const auto theta = bind(tape, params.extractor, false);
  const auto phi = bind(tape, params.classifier, false);
  return classify(extract(tape, batch, theta), phi).value();
}

}  // namespace melada::model
