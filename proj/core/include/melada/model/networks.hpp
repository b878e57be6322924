#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "melada/autodiff/tape.hpp"
#include "melada/data/domain.hpp"
#include "melada/model/params.hpp"

namespace melada::model {

/// Stacked LSTM over a batch of sequences; returns the top layer's hidden
/// state at the last time step (batch x hidden).
///
/// `theta` holds, per layer, a ((in + hidden) x 4 hidden) weight acting on
/// [x_t, h_{t-1}] and a (1 x 4 hidden) bias; gate order is input, forget,
/// cell candidate, output.
ad::Var extract(ad::Tape& tape, const data::Batch& batch, std::span<const ad::Var> theta);

/// fc1 -> tanh -> fc2 logits (batch x classes).
ad::Var classify(ad::Var features, std::span<const ad::Var> phi);

/// Softmax cross-entropy per sample (batch x 1), natural log.
ad::Var cross_entropy_per_sample(ad::Var logits, std::span<const std::uint8_t> labels);

/// Mean softmax cross-entropy over the batch.
ad::Var cross_entropy(ad::Var logits, std::span<const std::uint8_t> labels);

/// Row-wise argmax; ties go to the lowest class index.
std::vector<std::uint8_t> argmax_rows(const ad::Tensor& logits);

double accuracy(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> labels);

/// Forward pass without gradients: logits for every sample in `batch`.
ad::Tensor logits(const ModelParams& params, const data::Batch& batch);

/// Forward pass without gradients: extractor output for `batch`.
ad::Tensor features(const ModelParams& params, const data::Batch& batch);

}  // namespace melada::model
