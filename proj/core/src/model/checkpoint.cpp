#include "melada/model/checkpoint.hpp"

#include <cstring>

#include <fmt/format.h>

#include "melada/error.hpp"
#include "melada/util/binary.hpp"

namespace melada::model {

namespace {

constexpr char kMagic[4] = {'M', 'L', 'D', 'A'};
constexpr std::uint32_t kFlagFrozen = 1U;

std::vector<ParamGroup*> groups(ModelParams& p) {
  return {&p.extractor, &p.classifier, &p.controller, &p.anchor};
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ModelParams& params) {
  // Validate that the tensors match the declared dims before writing.
  const ModelParams layout = init_params(params.dims, 0);
  util::ByteWriter w;
  w.bytes(std::as_bytes(std::span(kMagic)));
  w.u32(kCheckpointVersion);
  const auto& d = params.dims;
  for (auto v : {d.input_dim, d.seq_len, d.hidden, d.layers, d.mlp_hidden, d.classes,
                 d.ctrl_hidden, d.ctrl_out}) {
    w.u32(v);
  }
  w.u32(params.controller_frozen ? kFlagFrozen : 0U);

  const std::array<const ParamGroup*, 4> src{&params.extractor, &params.classifier,
                                             &params.controller, &params.anchor};
  const std::array<const ParamGroup*, 4> ref{&layout.extractor, &layout.classifier,
                                             &layout.controller, &layout.anchor};
  for (std::size_t g = 0; g < src.size(); ++g) {
    if (src[g]->size() != ref[g]->size()) {
      throw ShapeError("checkpoint: parameter groups do not match the model dimensions");
    }
    for (std::size_t i = 0; i < src[g]->size(); ++i) {
      if (!src[g]->tensors[i].same_shape(ref[g]->tensors[i])) {
        throw ShapeError(fmt::format("checkpoint: {} has shape {}, dims imply {}", ref[g]->names[i],
                                     ad::shape_string(src[g]->tensors[i].shape()),
                                     ad::shape_string(ref[g]->tensors[i].shape())));
      }
      for (double v : src[g]->tensors[i].data()) w.f64(v);
    }
  }
  return w.take();
}

ModelParams decode_checkpoint(std::span<const std::uint8_t> bytes) {
  util::ByteReader r(bytes, "checkpoint");
  auto magic = r.bytes(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw FormatError(fmt::format("checkpoint: bad magic \"{}\" (expected \"MLDA\")",
                                  std::string(magic.begin(), magic.end())));
  }
  const auto version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw FormatError(fmt::format("checkpoint: unsupported version {}", version));
  }
  ModelDims d;
  d.input_dim = r.u32("input_dim");
  d.seq_len = r.u32("seq_len");
  d.hidden = r.u32("hidden");
  d.layers = r.u32("layers");
  d.mlp_hidden = r.u32("mlp_hidden");
  d.classes = r.u32("classes");
  d.ctrl_hidden = r.u32("ctrl_hidden");
  d.ctrl_out = r.u32("ctrl_out");
  const auto flags = r.u32("flags");
  try {
    d.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(fmt::format("checkpoint: {}", e.what()));
  }

  ModelParams p = init_params(d, 0);
  p.controller_frozen = (flags & kFlagFrozen) != 0;
  for (ParamGroup* g : groups(p)) {
    for (std::size_t i = 0; i < g->size(); ++i) {
      for (double& v : g->tensors[i].data()) v = r.f64(g->names[i]);
    }
  }
  if (r.remaining() != 0) {
    throw FormatError(fmt::format("checkpoint: {} trailing bytes", r.remaining()));
  }
  return p;
}

void write_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  util::write_file(path, encode_checkpoint(params));
}

ModelParams read_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(util::read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace melada::model
