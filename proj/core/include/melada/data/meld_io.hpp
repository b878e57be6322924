#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "melada/data/domain.hpp"

namespace melada::data {

inline constexpr std::uint32_t kMeldVersion = 1;

/// MELD v1, all integers and reals little-endian:
///
///   "MELD" | u32 version | u32 n_domains
///   per domain:
///     u32 subject_id | u32 n_samples | u32 seq_len | u32 feat_dim | u32 n_classes
///     u8 label[n_samples]
///     f64 frames[n_samples * seq_len * feat_dim]   (row-major)
std::vector<std::uint8_t> encode_meld(std::span<const Domain> domains);
std::vector<Domain> decode_meld(std::span<const std::uint8_t> bytes);

void write_dataset(std::span<const Domain> domains, const std::filesystem::path& path);
std::vector<Domain> read_dataset(const std::filesystem::path& path);

/// Flat CSV view for inspection: subject,sample,label,step,f0..f{D-1}.
void write_dataset_csv(std::span<const Domain> domains, const std::filesystem::path& path);

}  // namespace melada::data
