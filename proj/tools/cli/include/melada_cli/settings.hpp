#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "melada/adaptation/adaptation.hpp"
#include "melada/data/synthetic.hpp"
#include "melada/model/params.hpp"
#include "melada/training/config.hpp"

namespace melada::cli {

/// Everything a run can be configured with; file keys and flags share names.
struct Settings {
  std::string preset = "desk";
  data::SynthSpec synth;
  model::ModelDims dims;
  train::TrainConfig train;
  adapt::AdaptConfig adapt;
  std::uint32_t jobs = 1;
  bool baseline = false;
};

/// Full-size network from the reference configuration.
Settings full_preset();
/// Small network and batch that keep a synthetic LOSO run within minutes on
/// one core.
Settings desk_preset();
/// Throws InvalidArgument for names other than "full" and "desk".
Settings preset(std::string_view name);

/// Names of every settable key, in a stable order.
const std::vector<std::string>& setting_keys();

/// Sets `key` from its text form. Throws InvalidArgument for unknown keys or
/// malformed values.
void apply_setting(Settings& s, std::string_view key, std::string_view value);

/// key=value lines; '#' starts a comment; blank lines ignored.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text,
                                                                   std::string_view origin);
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

/// Resolved settings as key=value lines, one per key.
std::string describe(const Settings& s);

}  // namespace melada::cli
