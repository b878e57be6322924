#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "melada/autodiff/tape.hpp"
#include "melada/autodiff/tensor.hpp"

namespace melada::model {

/// Network sizes. Defaults are the full-scale EEG configuration
/// (62 channels x 5 bands, 15-step sequences, 2x256 LSTM, 100-unit MLP).
struct ModelDims {
  std::uint32_t input_dim = 310;
  std::uint32_t seq_len = 15;
  std::uint32_t hidden = 256;
  std::uint32_t layers = 2;
  std::uint32_t mlp_hidden = 100;
  std::uint32_t classes = 3;
  std::uint32_t ctrl_hidden = 128;
  std::uint32_t ctrl_out = 64;

  void validate() const;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Named tensors in a fixed order.
struct ParamGroup {
  std::vector<std::string> names;
  std::vector<ad::Tensor> tensors;

  std::size_t size() const noexcept { return tensors.size(); }
  std::size_t parameter_count() const noexcept;
  const ad::Tensor& at(std::string_view name) const;
  void add(std::string name, ad::Tensor value);

  friend bool operator==(const ParamGroup&, const ParamGroup&) = default;
};

/// The four parameter groups: extractor (theta), classifier (phi),
/// controller inner map g (omega) and the shift-independent anchor (tau).
struct ModelParams {
  ModelDims dims;
  ParamGroup extractor;
  ParamGroup classifier;
  ParamGroup controller;
  ParamGroup anchor;
  /// When set, the controller map g receives no further updates.
  bool controller_frozen = false;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// LSTM: uniform(-k, k) with k = 1/sqrt(hidden), forget-gate bias 1.
/// MLP layers: uniform(-k, k) with k = 1/sqrt(fan_in). Anchor starts at 0.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

/// Places a group on the tape, as leaves when `trainable`, else as constants.
std::vector<ad::Var> bind(ad::Tape& tape, const ParamGroup& group, bool trainable);

/// Copies the values of bound vars back into a group of the same layout.
void assign(ParamGroup& group, std::span<const ad::Var> vars);

std::vector<std::uint8_t> serialize_group(const ParamGroup& group);
/// SHA-256 of the group's little-endian values, hex encoded.
std::string group_hash(const ParamGroup& group);

}  // namespace melada::model
