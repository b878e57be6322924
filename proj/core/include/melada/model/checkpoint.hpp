#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "melada/model/params.hpp"

namespace melada::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Parameter checkpoint; layout documented in docs/checkpoint_format.md.
std::vector<std::uint8_t> encode_checkpoint(const ModelParams& params);
ModelParams decode_checkpoint(std::span<const std::uint8_t> bytes);

void write_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams read_checkpoint(const std::filesystem::path& path);

}  // namespace melada::model
