#include "melada_cli/settings.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>

#include <fmt/format.h>

#include "melada/error.hpp"

namespace melada::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw InvalidArgument(fmt::format("setting '{}': cannot parse '{}'", key, text));
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw InvalidArgument(fmt::format("setting '{}': expected true or false, got '{}'", key, text));
}

struct Field {
  std::function<void(Settings&, std::string_view)> set;
  std::function<std::string(const Settings&)> get;
};

template <typename T, typename Access>
Field make_field(std::string key, Access access) {
  Field f;
  f.set = [key, access](Settings& s, std::string_view v) {
    if constexpr (std::is_same_v<T, bool>) {
      access(s) = parse_bool(key, v);
    } else {
      access(s) = parse_number<T>(key, v);
    }
  };
  f.get = [access](const Settings& s) {
    return fmt::format("{}", access(s));
  };
  return f;
}

#define MELADA_FIELD(map, key, type, expr) \
  map.emplace_back(key, make_field<type>(key, [](auto& s) -> auto& { return expr; }))

const std::vector<std::pair<std::string, Field>>& fields() {
  static const auto table = [] {
    std::vector<std::pair<std::string, Field>> m;
    Field preset_field;
    preset_field.set = [](Settings& s, std::string_view v) { s.preset = std::string(v); };
    preset_field.get = [](const Settings& s) { return s.preset; };
    m.emplace_back("preset", preset_field);

    // One seed drives both data generation and training.
    Field seed_field;
    seed_field.set = [](Settings& s, std::string_view v) {
      s.train.seed = parse_number<std::uint64_t>("seed", v);
      s.synth.seed = s.train.seed;
    };
    seed_field.get = [](const Settings& s) { return fmt::format("{}", s.train.seed); };
    m.emplace_back("seed", seed_field);
    MELADA_FIELD(m, "n_domains", std::uint32_t, s.synth.n_domains);
    MELADA_FIELD(m, "n_classes", std::uint32_t, s.synth.n_classes);
    MELADA_FIELD(m, "feat_dim", std::uint32_t, s.synth.feat_dim);
    MELADA_FIELD(m, "seq_len", std::uint32_t, s.synth.seq_len);
    MELADA_FIELD(m, "samples_per_class", std::uint32_t, s.synth.samples_per_class);
    MELADA_FIELD(m, "shift_strength", double, s.synth.shift_strength);
    MELADA_FIELD(m, "noise_sigma", double, s.synth.noise_sigma);
    MELADA_FIELD(m, "class_scale", double, s.synth.class_scale);

    MELADA_FIELD(m, "hidden", std::uint32_t, s.dims.hidden);
    MELADA_FIELD(m, "layers", std::uint32_t, s.dims.layers);
    MELADA_FIELD(m, "mlp_hidden", std::uint32_t, s.dims.mlp_hidden);
    MELADA_FIELD(m, "ctrl_hidden", std::uint32_t, s.dims.ctrl_hidden);
    MELADA_FIELD(m, "ctrl_out", std::uint32_t, s.dims.ctrl_out);

    MELADA_FIELD(m, "lr", double, s.train.lr);
    MELADA_FIELD(m, "weight_decay", double, s.train.weight_decay);
    MELADA_FIELD(m, "lambda", double, s.train.lambda);
    MELADA_FIELD(m, "inner_alpha", double, s.train.inner_alpha);
    MELADA_FIELD(m, "n_valid_domains", std::uint32_t, s.train.n_valid_domains);
    MELADA_FIELD(m, "freeze_threshold", std::uint32_t, s.train.freeze_threshold);
    MELADA_FIELD(m, "max_iterations", std::uint32_t, s.train.max_iterations);
    MELADA_FIELD(m, "batch_per_domain", std::uint32_t, s.train.batch_per_domain);
    MELADA_FIELD(m, "pretrain_acc_gate", double, s.train.pretrain_acc_gate);
    MELADA_FIELD(m, "pretrain_max_iters", std::uint32_t, s.train.pretrain_max_iters);
    MELADA_FIELD(m, "pretrain_eval_every", std::uint32_t, s.train.pretrain_eval_every);
    MELADA_FIELD(m, "network_updates_per_iteration", std::uint32_t,
                 s.train.network_updates_per_iteration);
    MELADA_FIELD(m, "second_order", bool, s.train.second_order);
    MELADA_FIELD(m, "adversarial", bool, s.train.adversarial);

    MELADA_FIELD(m, "steps", std::uint32_t, s.adapt.steps);
    MELADA_FIELD(m, "adapt_lr", double, s.adapt.adapt_lr);
    MELADA_FIELD(m, "jobs", std::uint32_t, s.jobs);
    MELADA_FIELD(m, "baseline", bool, s.baseline);
    return m;
  }();
  return table;
}

#undef MELADA_FIELD

}  // namespace

Settings full_preset() {
  Settings s;
  s.preset = "full";
  return s;
}

Settings desk_preset() {
  Settings s;
  s.preset = "desk";
  s.dims.hidden = 16;
  s.dims.layers = 2;
  s.dims.mlp_hidden = 16;
  s.dims.ctrl_hidden = 32;
  s.dims.ctrl_out = 16;
  s.train.batch_per_domain = 16;
  s.adapt.adapt_lr = 0.05;
  return s;
}

Settings preset(std::string_view name) {
  if (name == "full") return full_preset();
  if (name == "desk") return desk_preset();
  throw InvalidArgument(fmt::format("unknown preset '{}' (expected full or desk)", name));
}

const std::vector<std::string>& setting_keys() {
  static const auto keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, field] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

void apply_setting(Settings& s, std::string_view key, std::string_view value) {
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(s, trim(value));
      return;
    }
  }
  throw InvalidArgument(fmt::format("unknown setting '{}'", key));
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text,
                                                                   std::string_view origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument(fmt::format("{}:{}: expected key=value", origin, line_no));
    }
    const auto key = trim(line.substr(0, eq));
    const auto& keys = setting_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw InvalidArgument(fmt::format("{}:{}: unknown setting '{}'", origin, line_no, key));
    }
    out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open config file {}", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path.string());
}

std::string describe(const Settings& s) {
  std::string out;
  for (const auto& [name, field] : fields()) out += fmt::format("{}={}\n", name, field.get(s));
  return out;
}

}  // namespace melada::cli
